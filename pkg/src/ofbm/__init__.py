"""Operator fractional Brownian motions: representations, covariance, spectra, simulation."""
__version__ = "0.1.0"
