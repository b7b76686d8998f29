"""Spectral simulation and matched asymptotics of an NLSE driven through resonance."""

__version__ = "0.1.0"
