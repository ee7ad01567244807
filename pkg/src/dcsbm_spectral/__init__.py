"""Alpha-normalized spectral community detection for dense heterogeneous graphs."""
__version__ = "0.1.0"
