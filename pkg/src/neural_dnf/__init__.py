"""Neural DNF rule learning on binary-attribute classification data."""

__version__ = "0.1.0"
