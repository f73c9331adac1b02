"""Electrostatic Gaussian process (electroGP) curve learning."""
__version__ = "0.1.0"
