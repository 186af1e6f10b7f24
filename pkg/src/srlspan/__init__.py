"""Span-graph semantic role labeling with a self-contained autodiff core."""

__version__ = "0.1.0"
