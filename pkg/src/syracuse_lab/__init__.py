"""Exact and Monte Carlo experiments on the Syracuse (accelerated Collatz) map."""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
