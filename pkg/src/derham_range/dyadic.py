"""Exact dyadic rationals k/2^n in [0, 1] and their binary digits."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

MAX_LEVEL = 62

_PATTERN = re.compile(r"^\s*(\d+)\s*/\s*2\^(\d+)\s*$")


@dataclass(frozen=True, order=False)
class Dyadic:
    """The number ``numerator / 2**level``, kept in canonical (reduced) form."""

    numerator: int
    level: int

    def __post_init__(self):
        k, n = self.numerator, self.level
        if n < 0 or k < 0:
            raise ValueError("numerator and level must be non-negative")
        if n > MAX_LEVEL:
            raise ValueError(f"level {n} exceeds {MAX_LEVEL}")
        if k > 1 << n:
            raise ValueError(f"{k}/2^{n} is larger than 1")
        if (k == 0 and n != 0) or (k > 0 and k % 2 == 0):
            raise ValueError(f"{k}/2^{n} is not in canonical form; use Dyadic.of")

    @classmethod
    def of(cls, k: int, n: int) -> "Dyadic":
        """Build from any ``(k, n)``, reducing even numerators."""
        if k == 0:
            return cls(0, 0)
        while k % 2 == 0 and n > 0:
            k //= 2
            n -= 1
        return cls(k, n)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse the ``"k/2^n"`` form; ``"0"`` and ``"1"`` are also accepted."""
        s = text.strip()
        if s in ("0", "1"):
            return cls(int(s), 0)
        m = _PATTERN.match(s)
        if not m:
            raise ValueError(f"expected 'k/2^n', got {text!r}")
        k, n = int(m.group(1)), int(m.group(2))
        if n > MAX_LEVEL:
            raise ValueError(f"level {n} exceeds {MAX_LEVEL} in {text!r}")
        if k > 1 << n:
            raise ValueError(f"{text!r} lies outside [0, 1]")
        if (k == 0 and n != 0) or (k > 0 and k % 2 == 0):
            raise ValueError(f"{text!r} is not canonical (numerator must be odd, or 0/2^0)")
        return cls(k, n)

    @classmethod
    def from_value(cls, x) -> "Dyadic":
        f = Fraction(x)
        den = f.denominator
        if den & (den - 1):
            raise ValueError(f"{x!r} is not a dyadic rational")
        n = den.bit_length() - 1
        return cls.of(f.numerator, n)

    def __str__(self):
        return f"{self.numerator}/2^{self.level}"

    def __float__(self):
        return math.ldexp(self.numerator, -self.level)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.level)

    def decimal(self) -> str:
        """Exact decimal expansion (finite, since the denominator is a power of 2)."""
        k, n = self.numerator, self.level
        if n == 0:
            return str(k)
        digits = str(k * 5**n).rjust(n + 1, "0")
        return f"{digits[:-n]}.{digits[-n:]}".rstrip("0").rstrip(".")

    def numerator_at(self, n: int) -> int:
        """Numerator of this value on the level-``n`` grid (``n >= level``)."""
        if n < self.level:
            raise ValueError(f"{self} is not on the level-{n} grid")
        return self.numerator << (n - self.level)


def _scaled_floor(x, n: int) -> tuple[int, bool]:
    """``floor(2^n x)`` and whether ``2^n x`` is an integer, computed exactly."""
    if isinstance(x, Dyadic):
        if n >= x.level:
            return x.numerator << (n - x.level), True
        return x.numerator >> (x.level - n), False
    if isinstance(x, float):
        y = math.ldexp(x, n)
        k = math.floor(y)
        return k, y == k
    f = Fraction(x) if not isinstance(x, Rational) else x
    num = f.numerator << n
    return num // f.denominator, num % f.denominator == 0


def digits(x, n: int) -> tuple[tuple[int, ...], Dyadic]:
    """First ``n`` binary digits of ``x`` in [0, 1) and the truncation zeta_n(x).

    Dyadic and rational inputs are handled with integer arithmetic. A float is
    taken at its exact binary value, so ``digits(0.1, n)`` expands the double
    nearest to 1/10.
    """
    if n < 1 or n > MAX_LEVEL:
        raise ValueError(f"digit count must be in 1..{MAX_LEVEL}, got {n}")
    v = x.as_fraction() if isinstance(x, Dyadic) else x
    if not (0 <= v < 1):
        raise ValueError(f"x must lie in [0, 1), got {x}")
    k, _ = _scaled_floor(x, n)
    bits = tuple((k >> (n - 1 - i)) & 1 for i in range(n))
    return bits, Dyadic.of(k, n)


def last_one_index(x: Dyadic) -> int:
    """Position of the final 1 digit of a dyadic in (0, 1)."""
    if x.numerator == 0 or x.level == 0:
        raise ValueError(f"{x} has no last 1 digit in (0, 1)")
    return x.level
