"""Adaptive-rank low-rank adapters with learnable per-head scale factors."""

__version__ = "0.1.0"
