"""Bounded whole-line solutions of x' + G(x, t) x = F(x, t)."""

__version__ = "0.1.0"
