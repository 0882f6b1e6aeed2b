"""Asymptotic analysis and truncation solvers for noncoercive problems."""

__version__ = "0.1.0"
