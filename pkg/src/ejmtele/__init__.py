"""Quantum teleportation through the elegant joint measurement (EJM)."""

__version__ = "0.1.0"
