"""svweno - spectral volume solver with control-volume-wise SWENO limiting for 1D/2D conservation laws."""

__version__ = "0.1.0"
