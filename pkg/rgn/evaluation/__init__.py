"""Metrics, complexity counts, cross-validation and reports."""
