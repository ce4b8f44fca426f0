"""Figure rendering for risray CSV outputs."""

__version__ = "0.1.0"
