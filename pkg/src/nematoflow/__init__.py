"""Desk-scale simulator and property-verification suite for compressible
active nematic hydrodynamics."""

__version__ = "0.1.0"
