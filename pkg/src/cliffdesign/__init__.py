"""Clifford-commutant algebra and convergence of Clifford circuits with few non-Clifford gates."""

__version__ = "0.1.0"
