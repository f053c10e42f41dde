"""The limit distribution function f_u of the scaled excursion depth.

Values on the dyadic grid come from the doubling recursion
``g(y/2) = A0(g(y))`` and ``g((1+y)/2) = A1(g(y))``; off the grid, f_u is
bracketed by composing the digit maps of ``x`` right to left.

All evaluators carry the pair ``(z, 1 - z)``. Both maps are rewritten with
``q = u^2 x_u^2`` and the identity ``x_u + 2q = 1`` so that every formula is
a ratio of positive terms::

    A0:  z' = x z / (1 - q z)          1 - z' = (q + (q + x) w) / (1 - q + q w)
    A1:  z' = x / (x + q w)            1 - z' = q w / (x + q w)

where ``w = 1 - z``. Errors then stay relative to whichever of ``z`` and
``1 - z`` is small, and do not compound along runs of 1 digits where A1 is
expanding (u > sqrt 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .dyadic import MAX_LEVEL, Dyadic, _scaled_floor, digits
from .mobius import Matrix2, compose, generators, x_param

SQRT3 = math.sqrt(3.0)
MAX_TABLE_LEVEL = 30
MIN_QUANTILE_TOL = 1e-12
HIGH_PRECISION_DPS = 40


class NumericRangeError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DeRhamModel:
    u: float
    x_u: float = field(init=False)
    q: float = field(init=False, repr=False)
    A0: Matrix2 = field(init=False, repr=False)
    A1: Matrix2 = field(init=False, repr=False)
    gamma_u: float = field(init=False)
    z1: float | None = field(init=False)

    def __post_init__(self):
        if not self.u > 0 or not math.isfinite(self.u):
            raise ValueError(f"the de Rham model needs a finite u > 0, got {self.u!r}")
        u = float(self.u)
        x = x_param(u)
        q = u * u * x * x
        A0, A1 = generators(u)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "x_u", x)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "A1", A1)
        object.__setattr__(self, "gamma_u", (1.0 - q) / x)
        # A1 fixes 1 and 1/(u^2 x); the second lies inside (0, 1) iff u > sqrt 3
        z1 = 1.0 / (u * u * x)
        object.__setattr__(self, "z1", z1 if u > SQRT3 and z1 < 1.0 else None)

    def maps(self):
        return self.A0, self.A1


def _step(x, q, bit, z, w):
    if bit:
        den = x + q * w
        return x / den, q * w / den
    return x * z / (1 - q * z), (q + (q + x) * w) / (1 - q + q * w)


def _compose(x, q, bits, z, w):
    for bit in reversed(bits):
        z, w = _step(x, q, bit, z, w)
    return z, w


@dataclass(frozen=True)
class CdfTable:
    """``values[j] = g_u(j / 2^level)``; ``tails[j] = 1 - values[j]`` to full relative accuracy."""

    level: int
    values: np.ndarray
    tails: np.ndarray

    def __len__(self):
        return len(self.values)

    def x_grid(self) -> np.ndarray:
        return np.arange(len(self.values)) / float(1 << self.level)

    def increments(self) -> np.ndarray:
        """Masses of the cells ``((j-1)/2^n, j/2^n]``, taken from whichever side is accurate."""
        from_values = np.diff(self.values)
        from_tails = -np.diff(self.tails)
        return np.where(self.values[1:] <= 0.5, from_values, from_tails)


def build_table(model: DeRhamModel, n: int) -> CdfTable:
    if not 0 <= n <= MAX_TABLE_LEVEL:
        raise ValueError(f"table level must be in 0..{MAX_TABLE_LEVEL}, got {n}")
    x, q = model.x_u, model.q
    z = np.array([0.0, 1.0])
    w = np.array([1.0, 0.0])
    for _ in range(n):
        zl, wl = _step(x, q, 0, z, w)
        zr, wr = _step(x, q, 1, z[1:], w[1:])
        z = np.concatenate([zl, zr])
        w = np.concatenate([wl, wr])
    z[0], w[0] = 0.0, 1.0
    z[-1], w[-1] = 1.0, 0.0
    return CdfTable(n, z, w)


def point_mass_table(n: int) -> CdfTable:
    """Grid values for u = 0, where the limit law is the point mass at 0."""
    if not 0 <= n <= MAX_TABLE_LEVEL:
        raise ValueError(f"table level must be in 0..{MAX_TABLE_LEVEL}, got {n}")
    values = np.ones((1 << n) + 1)
    values[0] = 0.0
    return CdfTable(n, values, 1.0 - values)


def _as_unit_interval(x):
    if isinstance(x, Dyadic):
        return x
    if isinstance(x, (Fraction, int)):
        v = Fraction(x)
    else:
        v = float(x)
        if not math.isfinite(v):
            raise ValueError(f"x must be finite, got {x!r}")
    if not 0 <= v <= 1:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    return v


def _digits_for_eval(x, max_depth):
    """Digits to compose and whether ``x`` is the dyadic they spell exactly."""
    k, exact = _scaled_floor(x, max_depth)
    if exact:
        d = Dyadic.of(k, max_depth)
        return digits(d, d.level)[0] if d.level else (), True
    return digits(x, max_depth)[0], False


def eval_cdf(model: DeRhamModel, x, max_depth: int = MAX_LEVEL, high_precision: bool = False):
    """Bracket ``(lower, upper)`` around f_u(x).

    At a dyadic with at most ``max_depth`` digits the exact grid value is
    returned as a zero-width bracket. Otherwise the bracket is
    ``[g(zeta_m(x)), g(zeta_m(x) + 2^-m)]`` with ``m = max_depth``; its width is
    whatever the maps achieve, which for u >= sqrt 3 can be large near long
    runs of 1 digits.
    """
    if not 1 <= max_depth <= MAX_LEVEL:
        raise ValueError(f"max_depth must be in 1..{MAX_LEVEL}, got {max_depth}")
    x = _as_unit_interval(x)
    if x == 1 or (isinstance(x, Dyadic) and x.numerator == 1 and x.level == 0):
        return (mpmath.mpf(1), mpmath.mpf(1)) if high_precision else (1.0, 1.0)
    bits, exact = _digits_for_eval(x, max_depth)
    if high_precision:
        with mpmath.workdps(HIGH_PRECISION_DPS):
            u = mpmath.mpf(model.u)
            xu = x_param(u)
            q = u * u * xu * xu
            one, zero = mpmath.mpf(1), mpmath.mpf(0)
            lo = _compose(xu, q, bits, zero, one)[0]
            hi = lo if exact else _compose(xu, q, bits, one, zero)[0]
            return +lo, +hi
    lo = _compose(model.x_u, model.q, bits, 0.0, 1.0)[0]
    if exact:
        return lo, lo
    return lo, _compose(model.x_u, model.q, bits, 1.0, 0.0)[0]


def eval_cdf_many(model: DeRhamModel, xs, max_depth: int = MAX_LEVEL):
    """Vectorised :func:`eval_cdf` over an iterable of floats or Fractions.

    Returns ``(lower, upper)`` arrays; each entry is bit-identical to the
    scalar evaluator.
    """
    if not 1 <= max_depth <= MAX_LEVEL:
        raise ValueError(f"max_depth must be in 1..{MAX_LEVEL}, got {max_depth}")
    pts = [x.as_fraction() if isinstance(x, Dyadic) else _as_unit_interval(x) for x in xs]
    size = len(pts)
    ks = np.zeros(size, dtype=np.int64)
    active_len = np.full(size, max_depth, dtype=np.int64)
    exact = np.zeros(size, dtype=bool)
    at_one = np.zeros(size, dtype=bool)
    for i, x in enumerate(pts):
        if x == 1:
            at_one[i] = exact[i] = True
            active_len[i] = 0
            continue
        k, ex = _scaled_floor(x, max_depth)
        ks[i] = k
        if ex:
            exact[i] = True
            active_len[i] = Dyadic.of(k, max_depth).level
    x, q = model.x_u, model.q
    lo_z, lo_w = np.zeros(size), np.ones(size)
    hi_z, hi_w = np.ones(size), np.zeros(size)
    for pos in range(max_depth - 1, -1, -1):
        bit = ((ks >> (max_depth - 1 - pos)) & 1).astype(bool)
        live = pos < active_len
        for z, w in ((lo_z, lo_w), (hi_z, hi_w)):
            z0, w0 = _step(x, q, 0, z, w)
            z1, w1 = _step(x, q, 1, z, w)
            nz = np.where(bit, z1, z0)
            nw = np.where(bit, w1, w0)
            z[live] = nz[live]
            w[live] = nw[live]
    lo_z[at_one] = 1.0
    hi_z[exact] = lo_z[exact]
    return lo_z, hi_z


def quantile(model: DeRhamModel, p: float, tol: float = 1e-12) -> float:
    """Smallest ``x`` with ``f_u(x) >= p``, located to within ``tol`` by dyadic bisection."""
    if tol < MIN_QUANTILE_TOL:
        raise ValueError(f"tol must be at least {MIN_QUANTILE_TOL:g}, got {tol:g}")
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if p == 0:
        return 0.0
    lo, hi, level = 0, 1, 0
    # invariant: f(lo / 2^level) < p <= f(hi / 2^level)
    while math.ldexp(hi - lo, -level) > tol:
        if level == MAX_LEVEL:
            break
        lo, hi, level = 2 * lo, 2 * hi, level + 1
        mid = lo + 1
        if eval_cdf(model, Dyadic.of(mid, level))[0] >= p:
            hi = mid
        else:
            lo = mid
    return math.ldexp(hi, -level)


def increment(model: DeRhamModel, x, n: int) -> float:
    """Mass of the cell ``(zeta_n(x), zeta_n(x) + 2^-n]``."""
    bits, _ = digits(x, n)
    return _cell_mass(model.x_u, model.q, bits)


def _cell_mass(x, q, bits):
    """``P(1) - P(0)`` for the digit product P, without cancellation.

    For a Mobius map ``P(1) - P(0) = det P / (den(0) den(1))``; both the
    determinant and the denominators factor over the digit maps, and every
    factor is a sum of positive terms.
    """
    lo_z, lo_w, hi_z, hi_w = 0.0, 1.0, 1.0, 0.0
    mass = 1.0
    for bit in reversed(bits):
        if bit:
            mass *= q * x / ((x + q * lo_w) * (x + q * hi_w))
        else:
            mass *= x / ((1 - q * lo_z) * (1 - q * hi_z))
        lo_z, lo_w = _step(x, q, bit, lo_z, lo_w)
        hi_z, hi_w = _step(x, q, bit, hi_z, hi_w)
    return mass


def product_entries(model: DeRhamModel, x, n: int, renormalize: bool = False) -> Matrix2:
    """The product ``A_{X_1(x)} ... A_{X_n(x)}``.

    With ``renormalize`` the running product is rescaled to unit max-entry
    after every factor; the induced map is unchanged.
    """
    if n > 40 and not renormalize:
        raise NumericRangeError(f"products longer than 40 need renormalize=True (n={n})")
    bits, _ = digits(x, n)
    P = Matrix2.identity()
    for bit in bits:
        try:
            P = compose(P, model.A1 if bit else model.A0)
        except ValueError as exc:
            # det / entries^2 tracks the cell width; below ~1e-16 the product is numerically singular
            raise NumericRangeError(f"matrix product is numerically singular at this depth: {exc}") from None
        if renormalize:
            P = P.scaled()
        big = max(abs(e) for e in P.entries())
        if big > 1e290 or big < 1e-290:
            raise NumericRangeError(f"matrix product entries out of range (max |entry| = {big:g})")
    return P
