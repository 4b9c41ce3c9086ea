"""Equivalent-expression corpus generation and embedding evaluation."""

__version__ = "0.1.0"
