"""Regularity checking and community panning via binary quadratic optimization."""

__version__ = "0.1.0"
