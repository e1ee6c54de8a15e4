"""Small-area base-population estimation from linked administrative records."""

__version__ = "0.1.0"
