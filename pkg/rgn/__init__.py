"""Star-shaped and hierarchical reasoning graph networks for pairwise feature verification."""

__version__ = "1.0.0"
