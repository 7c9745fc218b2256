"""Numerical toolkit for Beltrami coefficients, Beurling transforms and asymptotic variance."""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
