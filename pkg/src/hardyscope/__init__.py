"""Hardy weights, domain classification and discrete spectra on conformal surfaces."""

__version__ = "0.1.0"
