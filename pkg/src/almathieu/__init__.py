"""Numerics for the almost Mathieu operator and its SL(2,R) cocycle."""

__version__ = "0.1.0"
