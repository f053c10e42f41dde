"""Empirical CDFs of sampled depths and their distance to the exact grid values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .derham_cdf import CdfTable, DeRhamModel, build_table
from .walk_model import DepthHistogram


@dataclass(frozen=True)
class EmpiricalCDF:
    """``cumulative[d]`` is the fraction of samples with depth ``<= d``."""

    level: int
    cumulative: np.ndarray
    total: int

    def at_grid(self, n: int) -> np.ndarray:
        """ECDF of the coarse depth at level ``n``: entry ``k`` estimates g(k / 2^n).

        On this grid the level-N law coincides with the level-n law, since a
        walk reaches depth ``k 2^(N-n)`` exactly when its decimation reaches ``k``.
        """
        if n > self.level:
            raise ValueError(f"grid level {n} exceeds sample level {self.level}")
        stride = 1 << (self.level - n)
        k = np.arange(1, (1 << n) + 1)
        return np.concatenate([[0.0], self.cumulative[k * stride - 1]])

    @classmethod
    def from_table(cls, table: CdfTable, total: int = 0) -> "EmpiricalCDF":
        """The exact law as a synthetic ECDF: P(D <= d) = g((d + 1) / 2^N)."""
        return cls(table.level, np.asarray(table.values[1:], dtype=float), total)


def ecdf(hist: DepthHistogram) -> EmpiricalCDF:
    if hist.total < 1:
        raise ValueError("empty histogram")
    cum = np.cumsum(hist.counts) / hist.total
    cum[-1] = 1.0
    return EmpiricalCDF(hist.level, cum, hist.total)


def ks_against_exact(e: EmpiricalCDF, model: DeRhamModel, grid_level: int) -> float:
    """Sup distance between the ECDF and g_u over the level-``grid_level`` dyadics."""
    if grid_level > e.level:
        raise ValueError(f"grid level {grid_level} exceeds sample level {e.level}")
    exact = build_table(model, grid_level).values
    return float(np.max(np.abs(e.at_grid(grid_level)[1:] - exact[1:])))


def ks_between(a: EmpiricalCDF, b: EmpiricalCDF, grid_level: int) -> float:
    return float(np.max(np.abs(a.at_grid(grid_level) - b.at_grid(grid_level))))


def dkw_epsilon(n_samples: int, confidence: float = 0.99) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band, capped at 1."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    alpha = 1.0 - confidence
    return min(1.0, math.sqrt(math.log(2.0 / alpha) / (2.0 * n_samples)))
