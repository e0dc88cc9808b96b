"""Deterministic synthetic driving-scene generation, capture and detection evaluation."""

__version__ = "0.1.0"
