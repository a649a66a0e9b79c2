"""Spectra of the MDS-defining operator on compact symmetric spaces."""

__version__ = "0.1.0"
