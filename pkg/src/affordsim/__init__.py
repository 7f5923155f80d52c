"""Symbolic benchmark engine for household tasks with dynamic object affordances."""

__version__ = "0.1.0"
