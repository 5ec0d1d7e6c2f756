"""Data-driven quantum circuit learning on Bars-and-Stripes."""

__version__ = "0.1.0"
