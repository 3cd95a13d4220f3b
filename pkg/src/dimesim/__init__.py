"""Simulated distributed Internet topology measurement."""

__version__ = "0.1.0"
