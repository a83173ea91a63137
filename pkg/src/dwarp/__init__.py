"""Doubly warped product immersions: construction and numerical verification."""

__version__ = "0.1.0"
