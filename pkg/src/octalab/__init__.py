"""Numerical laboratory for octahedral norms in finite tensor products."""

__version__ = "0.1.0"
