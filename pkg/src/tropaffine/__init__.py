"""Exact computational toolkit for integral affine surfaces and threefolds."""

__version__ = "0.1.0"
