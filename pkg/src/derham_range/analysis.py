"""Regularity of the limit law: criterion at u = 1, atoms beyond sqrt 3, dimension bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .derham_cdf import SQRT3, DeRhamModel, _compose, build_table, increment
from .dyadic import Dyadic, _scaled_floor, digits, last_one_index
from .mobius import apply, derivative, fixed_points, generators, transpose, x_param

CLASS_TOL = 1e-12

DELTA_AT_0 = "delta-at-0"
ABSOLUTELY_CONTINUOUS = "absolutely-continuous"
BOUNDARY_SQRT3 = "boundary-sqrt3"
SINGULAR_WITH_ATOMS = "singular-with-atoms"
SINGULAR_CONTINUOUS = "singular-continuous-regime"


def classify(u: float) -> str:
    if u < 0:
        raise ValueError(f"u must be non-negative, got {u!r}")
    if u == 0:
        return DELTA_AT_0
    if abs(u - 1.0) <= CLASS_TOL:
        return ABSOLUTELY_CONTINUOUS
    if abs(u - SQRT3) <= CLASS_TOL:
        return BOUNDARY_SQRT3
    if u > SQRT3:
        return SINGULAR_WITH_ATOMS
    return SINGULAR_CONTINUOUS


def entropy(p: float) -> float:
    """Binary entropy in nats, with 0 log 0 = 0."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return -sum(t * math.log(t) for t in (p, 1.0 - p) if t > 0)


class DimensionBounds(NamedTuple):
    upper: float | None
    lower: float | None
    applicable: bool
    # u != 1 with 0 < u < sqrt 3: dimension strictly below 1 (not re-verified here)
    below_one: bool


def dimension_bounds(u: float) -> DimensionBounds:
    """Entropy bounds on the Hausdorff dimension, valid for 0 < u < 1.

    ``upper = s(x_u)/log 2`` bounds the dimension of the measure from above;
    sets of dimension below ``lower = s(2x_u/(1+x_u))/log 2`` are null.
    """
    below_one = 0 < u < SQRT3 and abs(u - 1.0) > CLASS_TOL
    if not 0 < u < 1:
        return DimensionBounds(None, None, False, below_one)
    x = x_param(u)
    return DimensionBounds(
        entropy(x) / math.log(2), entropy(2 * x / (1 + x)) / math.log(2), True, below_one
    )


def gamma_and_ratios(u: float, z: float) -> tuple[float, float, float]:
    """``gamma_u = 1 / A0(1)`` and the split ``p0(z) = (z+1)/(z+gamma)``, ``p1 = 1 - p0``."""
    model = DeRhamModel(u)
    gamma = model.gamma_u
    if z <= -gamma:
        raise ValueError(f"z must exceed -gamma_u = {-gamma!r}, got {z!r}")
    p0 = (z + 1.0) / (z + gamma)
    return gamma, p0, 1.0 - p0


def singularity_criterion(u: float) -> tuple[float, float]:
    """Residuals ``tA_i(gamma - 2) - (gamma - 2)``; both vanish only at u = 1.

    If f_u had a finite positive derivative at a non-dyadic point, the ratio
    r_n/s_n of the digit product would converge to gamma - 2 while being
    pushed by both transposed maps, forcing both residuals to zero.
    """
    model = DeRhamModel(u)
    t = model.gamma_u - 2.0
    return tuple(apply(transpose(A), t) - t for A in model.maps())


@dataclass(frozen=True)
class AtomInfo:
    z1: float | None
    z0: float | None
    iterates: tuple[float, ...]


def right_map_iterates(u: float, count: int) -> list[float]:
    """``A1^j(0)`` for ``j = 1 .. count``."""
    A1 = generators(u)[1]
    z, out = 0.0, []
    for _ in range(count):
        z = apply(A1, z)
        out.append(z)
    return out


def _bisect(f, lo, hi, tol):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def atom_analysis(u: float, iterations: int = 100) -> AtomInfo:
    """Fixed point z1 of the right map, the point z0 where its slope crosses 1, and A1^j(0).

    Both points exist only for u > sqrt 3. z1 is the root of the fixed-point
    quadratic other than 1, i.e. ``1 / (u^2 x_u)``; z0 is found by bisection.
    """
    model = DeRhamModel(u)
    iterates = tuple(right_map_iterates(u, iterations))
    if classify(u) != SINGULAR_WITH_ATOMS:
        return AtomInfo(None, None, iterates)
    roots = [r for r in fixed_points(model.A1) if 0 < r < 1]
    z1 = roots[0] if roots else model.z1
    z0 = _bisect(lambda z: derivative(model.A1, z) - 1.0, 0.0, 1.0, 1e-12)
    return AtomInfo(z1, z0, iterates)


@dataclass(frozen=True)
class AtomMass:
    x: Dyadic
    m: int | None
    mass: float
    finite_n_check: float | None
    has_atoms: bool
    note: str = field(default="")


def atom_mass(u: float, x: Dyadic, check_depth: int = 60) -> AtomMass:
    """Mass of the atom at a dyadic ``x`` in (0, 1] for u > sqrt 3.

    With ``phi`` the composition of the maps for the digits of ``x`` before its
    last 1, followed by A0, the cells ``(x - 2^-n, x]`` have mass
    ``phi(1) - phi(A1^(n-m)(0))``, which decreases to ``phi(1) - phi(z1)``.
    ``finite_n_check`` is the cell mass at ``n - m = check_depth``.
    """
    if isinstance(x, str):
        x = Dyadic.parse(x)
    if x.numerator == 0:
        raise ValueError("0 carries no atom")
    if classify(u) != SINGULAR_WITH_ATOMS:
        return AtomMass(x, None, 0.0, None, False, "no atoms for u <= sqrt 3")
    model = DeRhamModel(u)
    A1 = model.A1
    z1 = model.z1
    tail = 0.0
    for _ in range(check_depth):
        tail = apply(A1, tail)

    if x.level == 0:
        # x = 1: the cells (1 - 2^-n, 1] have mass 1 - A1^n(0)
        return AtomMass(x, 0, 1.0 - z1, 1.0 - tail, True)

    m = last_one_index(x)
    head = digits(x, m)[0][: m - 1] + (0,)

    def phi(z):
        zz, ww = _compose(model.x_u, model.q, head, z, 1.0 - z)
        return zz, ww

    top_z, top_w = phi(1.0)
    low_z, low_w = phi(z1)
    chk_z, chk_w = phi(tail)
    if top_z <= 0.5:
        mass, check = top_z - low_z, top_z - chk_z
    else:
        mass, check = low_w - top_w, chk_w - top_w
    return AtomMass(x, m, mass, check, True)


def max_increment(u: float, m: int) -> float:
    if not 1 <= m <= 24:
        raise ValueError(f"m must be in 1..24, got {m}")
    return float(build_table(DeRhamModel(u), m).increments().max())


class BoundaryChecks(NamedTuple):
    ordered: bool
    slopes_increasing: bool
    slope_ratio_3: bool
    slope_order_upper: bool


def boundary_map_checks(grid_size: int = 1000) -> BoundaryChecks:
    """Grid checks of the u = sqrt 3 inequalities between h0 = A0 and h1 = A1.

    (1) h0 < h1 on [0, 1]; (2) h0', h1' strictly increasing on (0, 1);
    (3) h0' <= 3 h1' on (0, 1); (4) h0' <= h1' for z >= h1(h1(0)).
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    h0, h1 = generators(SQRT3)
    closed = np.linspace(0.0, 1.0, grid_size)
    inner = closed[1:-1]
    v0 = np.array([apply(h0, z) for z in closed])
    v1 = np.array([apply(h1, z) for z in closed])
    d0 = np.array([derivative(h0, z) for z in inner])
    d1 = np.array([derivative(h1, z) for z in inner])
    threshold = apply(h1, apply(h1, 0.0))
    upper = inner >= threshold
    return BoundaryChecks(
        bool(np.all(v0 < v1)),
        bool(np.all(np.diff(d0) > 0) and np.all(np.diff(d1) > 0)),
        bool(np.all(d0 <= 3 * d1)),
        bool(np.all(d0[upper] <= d1[upper])),
    )


class Diagnostic(NamedTuple):
    scaled_increments: list[float]
    ratios: list[float]
    increment_ratios: list[float]


def derivative_diagnostic(u: float, x, max_level: int = 40) -> Diagnostic:
    """Sequences ``2^n * cell mass`` and ``p_{X_{n+1}}(r_n / s_n)`` along the digits of ``x``.

    ``ratios[n]`` equals the ratio of consecutive cell masses
    (``increment_ratios[n]``); both are reported, and nothing is inferred
    about convergence.
    """
    if not 1 <= max_level <= 61:
        raise ValueError("max_level must be in 1..61")
    if isinstance(x, Dyadic) or _scaled_floor(x, max_level + 1)[1]:
        raise ValueError("x is dyadic at this depth; use atom_mass for dyadic points")
    model = DeRhamModel(u)
    gamma = model.gamma_u
    bits, _ = digits(x, max_level + 1)
    masses = [increment(model, x, n) for n in range(1, max_level + 2)]
    scaled = [math.ldexp(masses[n - 1], n) for n in range(1, max_level + 1)]
    ratios = []
    t = 0.0  # r_0 / s_0 for the empty product
    for n in range(max_level):
        p0 = (t + 1.0) / (t + gamma)
        ratios.append(p0 if bits[n] == 0 else 1.0 - p0)
        t = apply(transpose(model.A1 if bits[n] else model.A0), t)
    inc_ratios = [masses[0] / 1.0] + [masses[n] / masses[n - 1] for n in range(1, max_level)]
    return Diagnostic(scaled, ratios, inc_ratios)


@dataclass(frozen=True)
class RegularityReport:
    u: float
    x_u: float
    gamma_u: float | None
    criterion_residuals: tuple[float, float] | None
    dim_bounds: DimensionBounds
    z1: float | None
    z0: float | None
    atom_mass_at_1: float | None
    classification: str

    def to_json(self) -> dict:
        return {
            "u": self.u,
            "x_u": self.x_u,
            "gamma_u": self.gamma_u,
            "classification": self.classification,
            "criterion_residuals": list(self.criterion_residuals) if self.criterion_residuals else [],
            "dim_bounds": {
                "upper": self.dim_bounds.upper,
                "lower": self.dim_bounds.lower,
                "applicable": self.dim_bounds.applicable,
                "dim_below_one": self.dim_bounds.below_one,
            },
            "atoms": {
                "z1": self.z1,
                "z0": self.z0,
                "mass_at_1": self.atom_mass_at_1,
                "applicable": self.z1 is not None,
                "mass_is_derived_equality": self.z1 is not None,
            },
        }


def regularity_report(u: float) -> RegularityReport:
    cls = classify(u)
    if cls == DELTA_AT_0:
        return RegularityReport(0.0, 1.0, None, None, dimension_bounds(0.0), None, None, None, cls)
    model = DeRhamModel(u)
    info = atom_analysis(u, iterations=1)
    mass = atom_mass(u, Dyadic(1, 0)).mass if info.z1 is not None else None
    return RegularityReport(
        model.u,
        model.x_u,
        model.gamma_u,
        singularity_criterion(u),
        dimension_bounds(u),
        info.z1,
        info.z0,
        mass,
        cls,
    )
