"""Exact and Monte Carlo experiments on whether random {0, +-1} determinants are squares."""

__version__ = "0.1.0"
