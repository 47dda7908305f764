"""Ergotropy, correlations and collective dissipation for small quantum systems."""

__version__ = "0.1.0"
