"""Finite-size one-way hashing: bounds and exact simulation."""

__version__ = "0.1.0"
