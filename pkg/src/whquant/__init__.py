"""Weyl-Heisenberg integral quantization of observables truncated to an interval."""

__version__ = "0.1.0"
