"""Equidistant sets of a hyperplane and the epigraph of a positive function."""

__version__ = "0.1.0"
