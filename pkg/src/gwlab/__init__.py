"""Numerical laboratory for generalized Weierstrass functions of expanding circle maps."""

__version__ = "0.1.0"
