"""Exact computations with spherical pairs, their algebras and A-infinity structures."""

__version__ = "0.1.0"
