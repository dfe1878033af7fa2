"""Advanced Harmonic online bin packing and its certification pipeline."""
from .numerics import format_rational, parse_rational
from .params import ClassTable, load_canonical, load_params

__all__ = ["ClassTable", "format_rational", "load_canonical", "load_params", "parse_rational"]
__version__ = "0.1.0"
