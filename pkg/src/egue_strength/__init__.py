"""Bivariate transition strength moments for EGUE(k) with particle removal/addition."""

__version__ = "0.1.0"
