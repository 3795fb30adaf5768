"""Exact elimination certificates for Coulomb potential differences and a toy grid DFT."""
__version__ = "0.1.0"
