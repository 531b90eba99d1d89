"""Two-particle non-reciprocal Hubbard model: spectra, localization, topology, circuits."""

__version__ = "0.1.0"
