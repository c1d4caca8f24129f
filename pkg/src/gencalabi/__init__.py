"""Curvature verification engine for generalized Calabi type Kahler surfaces."""

__version__ = "0.1.0"
