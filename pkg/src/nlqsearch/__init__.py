"""Continuous-time quantum search with nonlinear Schrodinger dynamics."""

__version__ = "0.1.0"
