"""Training loop and run tracking."""
