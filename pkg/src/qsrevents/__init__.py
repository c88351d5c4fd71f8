"""Qualitative spatial features and tree-CRF classifiers for human-object events."""

__version__ = "0.1.0"
