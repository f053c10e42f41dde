"""2x2 matrices acting as real Mobius maps, and the generator pair A_{u,0}, A_{u,1}.

A matrix ``[[a, b], [c, d]]`` acts on a real ``z`` by ``(a z + b) / (c z + d)``.
Entries may be floats or mpmath ``mpf`` values; every operation here only uses
ring arithmetic and division, so the extended-precision path shares the code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

DEN_FLOOR = 1e-14


class PoleError(ArithmeticError):
    """The Mobius map was evaluated too close to its pole."""

    def __init__(self, matrix, z):
        super().__init__(f"|c*z + d| below {DEN_FLOOR:g} for {matrix!r} at z={z!r}")
        self.matrix = matrix
        self.z = z


class DegenerateMatrixError(ValueError):
    pass


@dataclass(frozen=True)
class Matrix2:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in "abcd":
            if not math.isfinite(float(getattr(self, name))):
                raise ValueError(f"matrix entry {name} is not finite")
        if self.det == 0:
            raise ValueError("matrix has zero determinant")

    @classmethod
    def identity(cls) -> "Matrix2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def scaled(self) -> "Matrix2":
        """Same Mobius map, entries divided by the largest absolute entry."""
        s = max(abs(e) for e in self.entries())
        return Matrix2(self.a / s, self.b / s, self.c / s, self.d / s)

    def __matmul__(self, other: "Matrix2") -> "Matrix2":
        return compose(self, other)

    def __call__(self, z):
        return apply(self, z)


def x_param(u):
    """Positive root of ``2 u^2 x^2 + x - 1 = 0``; equals 1 at ``u = 0``."""
    if u < 0:
        raise ValueError(f"u must be non-negative, got {u!r}")
    if isinstance(u, mpmath.mpf):
        return 2 / (1 + mpmath.sqrt(1 + 8 * u * u))
    return 2.0 / (1.0 + math.sqrt(1.0 + 8.0 * u * u))


def generators(u) -> tuple[Matrix2, Matrix2]:
    """Return ``(A_{u,0}, A_{u,1})``.

    ``u = 0`` is rejected: the limit law there is the point mass at 0 and has
    no de Rham description (both maps would degenerate).
    """
    if u == 0:
        raise ValueError("u = 0 has no generator pair; the limit law is the point mass at 0")
    if u < 0:
        raise ValueError(f"u must be positive, got {u!r}")
    x = x_param(u)
    q = u * u * x * x
    return Matrix2(x, 0 * x, -q, 1 + 0 * x), Matrix2(0 * x, x, -q, 1 - q)


def apply(A: Matrix2, z, floor: float = DEN_FLOOR):
    den = A.c * z + A.d
    if abs(den) <= floor:
        raise PoleError(A, z)
    return (A.a * z + A.b) / den


def compose(A: Matrix2, B: Matrix2) -> Matrix2:
    """Matrix product ``A @ B``; as maps, ``z -> A(B(z))``."""
    return Matrix2(
        A.a * B.a + A.b * B.c,
        A.a * B.b + A.b * B.d,
        A.c * B.a + A.d * B.c,
        A.c * B.b + A.d * B.d,
    )


def transpose(A: Matrix2) -> Matrix2:
    return Matrix2(A.a, A.c, A.b, A.d)


def derivative(A: Matrix2, z, floor: float = DEN_FLOOR):
    den = A.c * z + A.d
    if abs(den) <= floor:
        raise PoleError(A, z)
    return A.det / (den * den)


def fixed_points(A: Matrix2) -> tuple:
    """Real solutions of ``A(z) = z`` in ascending order (a double root is repeated).

    Solves ``c z^2 + (d - a) z - b = 0``. A discriminant that is negative only
    at rounding level is treated as zero, so tangential fixed points survive.
    """
    a, b, c, d = A.entries()
    if b == 0 and c == 0 and a == d:
        raise DegenerateMatrixError("scalar multiple of the identity fixes every point")
    if c == 0:
        if d == a:
            return ()
        return (b / (d - a),)
    p = d - a
    disc = p * p + 4 * c * b
    scale = max(1.0, float(p * p), float(abs(4 * c * b)))
    if disc < 0:
        if disc > -1e-12 * scale:
            disc = 0 * disc
        else:
            return ()
    sq = mpmath.sqrt(disc) if isinstance(disc, mpmath.mpf) else math.sqrt(disc)
    # numerically stable quadratic roots
    t = -(p + (sq if p >= 0 else -sq)) / 2
    roots = []
    if t != 0:
        roots.extend([t / c, -b / t])
    else:
        roots.extend([0 * b, 0 * b])
    return tuple(sorted(roots))
