"""Hypergraph quasirandomness, projective planes and codegree constructions."""

__version__ = "0.1.0"
