"""Variational solver for the semiclassical magnetic Choquard equation."""

__version__ = "1.0.0"
