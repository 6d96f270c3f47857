"""Nonlocal perimeters and the nonlocal liquid-drop functional."""

__version__ = "0.1.0"
