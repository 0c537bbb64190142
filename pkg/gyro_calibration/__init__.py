"""Calibración in situ del factor de escala de giróscopos MEMS triaxiales."""

__version__ = "1.0.0"
