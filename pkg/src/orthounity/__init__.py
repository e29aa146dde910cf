"""Coefficients of the orthorecursive expansion of 1 over x, x^2, ... in L^2[0, 1].

Exact rational and rigorous ball engines, inequality checks, series identities
and asymptotic diagnostics.
"""

from .ball import BallCoefficientTable, BallReal, ball_coefficients, estimate_K
from .exact import ExactCoefficientTable, exact_coefficients

__all__ = [
    "BallCoefficientTable",
    "BallReal",
    "ExactCoefficientTable",
    "ball_coefficients",
    "estimate_K",
    "exact_coefficients",
]

__version__ = "0.1.0"
