"""Counting beta-expansions, transfer-operator densities, Garsia entropy and
the random beta-transformation."""

from .core import (
    FloatBeta,
    QuadNumber,
    QuadraticBeta,
    apply_T,
    cmp_points,
    golden,
    make_beta,
)
from .errors import BetaCountError

__version__ = "0.1.0"

__all__ = [
    "BetaCountError",
    "FloatBeta",
    "QuadNumber",
    "QuadraticBeta",
    "apply_T",
    "cmp_points",
    "golden",
    "make_beta",
]
