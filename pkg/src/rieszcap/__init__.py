"""Riesz capacity on finite doubling metric measure spaces."""

__version__ = "0.1.0"
