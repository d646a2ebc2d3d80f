"""Double-power NLS numerics."""
__version__ = "0.1.0"
