"""Traces, characters and spectral gap certificates for finite matrix groups."""

__version__ = "0.1.0"
