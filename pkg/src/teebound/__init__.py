"""Exact numerics for lower bounds on topological entanglement entropy under shallow circuits."""

__version__ = "0.1.0"
