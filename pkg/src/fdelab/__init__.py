"""Verification toolkit for gradient estimates of weighted fast diffusion equations."""

__version__ = "0.1.0"
