"""Helmholtz spectra of slightly deformed spherical cavities."""
__version__ = "0.1.0"
