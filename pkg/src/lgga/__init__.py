"""Genetic-programming symbolic regression guided by auxiliary truths."""

__version__ = "0.1.0"
