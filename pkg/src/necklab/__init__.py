"""Numerical laboratory for bubble trees and neck estimates of harmonic-type maps into S^2."""
from .fields import Field, Grid, read_field, write_field

__all__ = ["Field", "Grid", "read_field", "write_field"]
__version__ = "0.1.0"
