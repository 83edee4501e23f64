"""Pseudo-spectral laboratory for the SQG front equation."""

__version__ = "0.1.0"
