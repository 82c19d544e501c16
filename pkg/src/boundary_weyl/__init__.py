"""Boundary-trace spectral asymptotics on model domains with concave boundary."""

__version__ = "0.1.0"
