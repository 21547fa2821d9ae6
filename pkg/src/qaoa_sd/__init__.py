"""Subgroup discovery on NSL-KDD as a QUBO, solved with simulated QAOA."""

__version__ = "0.1.0"
