"""Entropy-based stability of log-Sobolev and Gagliardo-Nirenberg inequalities."""

__version__ = "0.1.0"
