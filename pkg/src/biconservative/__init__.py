"""Residual-based verification of biconservative surfaces in space forms."""

__version__ = "0.1.0"
