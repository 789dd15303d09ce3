"""Executable models of safety architecture patterns for ML-based functions."""

__version__ = "0.1.0"
