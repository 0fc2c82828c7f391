"""Symbolic mini-language engine with completion scoring and training utilities."""

__version__ = "0.1.0"
