"""Rate regions for duplex quantum transduction."""

__version__ = "0.1.0"
