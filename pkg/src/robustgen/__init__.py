"""Generalization bounds for robust learners that scale with the number of occupied cells."""

__version__ = "0.1.0"
