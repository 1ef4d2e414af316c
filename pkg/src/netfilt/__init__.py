"""Network filtering for target detection in sparse Gaussian networks."""
__version__ = "0.1.0"
