"""Exact kernels for generalized modular functors of Liouville CFT."""

__version__ = "0.1.0"
