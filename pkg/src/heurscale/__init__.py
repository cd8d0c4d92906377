"""Measuring how large a network must be to fit exact heuristic values on NP-hard search domains."""

__version__ = "0.1.0"
