"""Exact and Monte Carlo study of the scaled range of a self-interacting walk family.

The law of ``R_n / 2^n - 1`` (range at exit from [-2^n, 2^n], rescaled)
converges to a distribution whose CDF solves a two-map de Rham equation.
"""

__version__ = "0.1.0"

from .derham_cdf import CdfTable, DeRhamModel, build_table, eval_cdf, increment, quantile
from .dyadic import Dyadic, digits
from .mobius import Matrix2, generators, x_param

__all__ = [
    "CdfTable",
    "DeRhamModel",
    "Dyadic",
    "Matrix2",
    "build_table",
    "digits",
    "eval_cdf",
    "generators",
    "increment",
    "quantile",
    "x_param",
]
