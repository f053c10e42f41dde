"""Hierarchical construction of the walk law and exact sampling of excursion depths.

A walk in W_{N,+} starts at 0 and stops at its first visit to +-2^N, which is
+2^N. Decimating it at scale 2^(N-1) gives a level-1 skeleton
``(0, e_1, 0, ..., 0, e_{m-1}, 0, 1, 2)`` and ``2m`` sub-walks, each an
independent level-(N-1) walk after a sign flip. The excursion depth
``D_N = R_N - 2^N`` (how far below 0 the walk goes) only depends on the
sub-walks that leave coarse height 0 upwards and those that climb from -1
back to 0:

    D_N = max( D'_i                    for pairs with e_i = +1,
               2^(N-1) + D'_i          for pairs with e_i = -1,
               D'_final )

so sampling costs about ``(1/x_u)^N`` draws instead of a full path.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .mobius import x_param

MAX_SAMPLE_LEVEL = 20
DEFAULT_BUDGET = 10**9
_BATCH_NODES = 1 << 21


class BudgetExceededError(RuntimeError):
    pass


class PathDomainError(ValueError):
    pass


@dataclass(frozen=True)
class LatticePath:
    points: tuple[int, ...]

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts or pts[0] != 0:
            raise PathDomainError("a path starts at 0")
        for i in range(len(pts) - 1):
            if abs(pts[i + 1] - pts[i]) != 1:
                raise PathDomainError(f"step {i} -> {i + 1} is not a nearest-neighbour step")

    def __len__(self):
        return len(self.points)

    @property
    def length(self) -> int:
        """Number of steps L(path)."""
        return len(self.points) - 1


@dataclass(frozen=True)
class Skeleton:
    """Level-1 coarse walk with ``pairs`` returns to 0 before the final climb 0 -> 1 -> 2."""

    pairs: int
    signs: tuple[int, ...] = ()

    def __post_init__(self):
        if self.pairs < 1 or len(self.signs) != self.pairs - 1:
            raise ValueError("a skeleton with m pairs carries m - 1 signs")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")

    def path(self) -> LatticePath:
        pts = [0]
        for s in self.signs:
            pts += [s, 0]
        pts += [1, 2]
        return LatticePath(tuple(pts))


@dataclass
class DepthHistogram:
    level: int
    counts: np.ndarray
    seed: int = 0
    workers: int = 1
    total: int = field(init=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.counts) != 1 << self.level:
            raise ValueError(f"a level-{self.level} histogram has {1 << self.level} depth bins")
        self.total = int(self.counts.sum())

    def merge(self, other: "DepthHistogram") -> "DepthHistogram":
        if other.level != self.level:
            raise ValueError("cannot merge histograms of different levels")
        return DepthHistogram(self.level, self.counts + other.counts, self.seed, self.workers)

    def as_dict(self) -> dict[str, int]:
        return {str(d): int(c) for d, c in enumerate(self.counts) if c}


# --- paths -----------------------------------------------------------------


def _hit_times(points, M):
    """Indices T_0 = 0 < T_1 < ... of successive visits to new points of 2^M Z."""
    scale = 1 << M
    times = [0]
    current = points[0]
    for j in range(1, len(points)):
        p = points[j]
        if p % scale == 0 and p != current:
            times.append(j)
            current = p
    return times


def decimate(path: LatticePath, M: int) -> LatticePath:
    """Coarse path ``2^-M Q_M path``: successive first visits to new multiples of 2^M."""
    if M < 0:
        raise ValueError("M must be non-negative")
    if M == 0:
        return path
    pts = path.points
    return LatticePath(tuple(pts[t] >> M for t in _hit_times(pts, M)))


def check_positive_exit(path: LatticePath, N: int) -> None:
    """Raise unless ``path`` belongs to W_{N,+}."""
    target = 1 << N
    pts = path.points
    for i, p in enumerate(pts[1:], start=1):
        if abs(p) == target:
            if i != len(pts) - 1:
                raise PathDomainError(f"path reaches +-2^{N} at step {i} before its end")
            if p != target:
                raise PathDomainError(f"path exits at -2^{N}, not +2^{N}")
            return
    raise PathDomainError(f"path never reaches +-2^{N}")


def path_weight(u: float, N: int, path: LatticePath) -> float:
    """Exact probability of ``path`` under the level-N positive-exit law."""
    if N < 1:
        raise ValueError("N must be at least 1")
    check_positive_exit(path, N)
    return _weight(u, x_param(u), N, path.points)


def _weight(u, x, N, pts):
    if N == 1:
        L = len(pts) - 1
        return u ** (L - 2) * x ** (L - 1)
    times = _hit_times(pts, N - 1)
    coarse = tuple(pts[t] >> (N - 1) for t in times)
    w = _weight(u, x, 1, coarse)
    for a, b in zip(times, times[1:]):
        sign = 1 if pts[b] > pts[a] else -1
        sub = tuple(sign * (p - pts[a]) for p in pts[a : b + 1])
        w *= _weight(u, x, N - 1, sub)
        if w == 0:
            break
    return w


# --- sampling --------------------------------------------------------------


def sample_skeleton(u: float, rng: np.random.Generator) -> Skeleton:
    """Draw a skeleton: pairs ~ Geometric(x_u) on {1, 2, ...}, signs fair and independent.

    There are 2^(m-1) skeletons with m pairs, each of weight u^(2m-2) x^(2m-1),
    which sums to x (1 - x)^(m-1) because 2 u^2 x^2 = 1 - x.
    """
    x = x_param(u)
    m = int(rng.geometric(x))
    signs = tuple(int(s) for s in rng.choice((1, -1), size=m - 1)) if m > 1 else ()
    return Skeleton(m, signs)


def sample_depth(u: float, N: int, rng: np.random.Generator) -> int:
    """One draw of the excursion depth D_N under the level-N positive-exit law."""
    if not 0 <= N <= MAX_SAMPLE_LEVEL:
        raise BudgetExceededError(f"level must be in 0..{MAX_SAMPLE_LEVEL}, got {N}")
    if N == 0 or u == 0:
        return 0
    sk = sample_skeleton(u, rng)
    half = 1 << (N - 1)
    depth = sample_depth(u, N - 1, rng)
    for s in sk.signs:
        d = sample_depth(u, N - 1, rng)
        depth = max(depth, d if s == 1 else half + d)
    return depth


def _depths_batch(x: float, N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised ``size`` draws of D_N: expand the tree top-down, reduce bottom-up."""
    if N == 0 or x == 1.0:
        return np.zeros(size, dtype=np.int64)
    # top-down: per level, number of pairs per node and the offset carried by each child
    pairs_by_level = []
    offsets_by_level = []
    nodes = size
    for level in range(N, 1, -1):
        m = rng.geometric(x, size=nodes)
        total = int(m.sum())
        starts = np.cumsum(m) - m
        last = np.zeros(total, dtype=bool)
        last[starts + m - 1] = True
        minus = (rng.random(total) < 0.5) & ~last
        pairs_by_level.append((m, starts))
        offsets_by_level.append(np.where(minus, 1 << (level - 1), 0).astype(np.int64))
        nodes = total
    # level-1 nodes: children have depth 0, so D_1 = 1 iff some sign is -1
    m = rng.geometric(x, size=nodes)
    depth = (rng.binomial(m - 1, 0.5) > 0).astype(np.int64)
    for (m, starts), offsets in zip(reversed(pairs_by_level), reversed(offsets_by_level)):
        depth = np.maximum.reduceat(offsets + depth, starts)
    return depth


def sample_depths(u: float, N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws of D_N, in batches bounded by expected tree size."""
    if not 0 <= N <= MAX_SAMPLE_LEVEL:
        raise BudgetExceededError(f"level must be in 0..{MAX_SAMPLE_LEVEL}, got {N}")
    x = x_param(u)
    per_sample = max(1.0, (1.0 / x) ** max(N - 1, 0))
    batch = max(1, int(_BATCH_NODES / per_sample))
    out = np.empty(size, dtype=np.int64)
    for start in range(0, size, batch):
        stop = min(size, start + batch)
        out[start:stop] = _depths_batch(x, N, stop - start, rng)
    return out


def expected_cost(u: float, N: int, count: int) -> float:
    return count * (1.0 / x_param(u)) ** N


def budget_from_env() -> int:
    raw = os.environ.get("DERHAM_RANGE_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"DERHAM_RANGE_BUDGET must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("DERHAM_RANGE_BUDGET must be positive")
    return value


def worker_rng(seed: int, worker: int) -> np.random.Generator:
    """Counter-based stream for one worker; independent of scheduling."""
    ss = np.random.SeedSequence(entropy=seed % (1 << 64), spawn_key=(worker,))
    return np.random.Generator(np.random.Philox(ss))


def partition(count: int, workers: int) -> list[int]:
    base, extra = divmod(count, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def simulate_ranges(
    u: float, N: int, count: int, seed: int, workers: int = 1, budget: int | None = None
) -> DepthHistogram:
    """Histogram of ``count`` depths D_N.

    The result is a deterministic function of ``(u, N, count, seed, workers)``:
    worker ``w`` takes a fixed share of the samples and its own Philox stream.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if not 0 <= N <= MAX_SAMPLE_LEVEL:
        raise BudgetExceededError(f"level must be in 0..{MAX_SAMPLE_LEVEL}, got {N}")
    budget = budget_from_env() if budget is None else budget
    cost = expected_cost(u, N, count)
    if cost > budget:
        raise BudgetExceededError(
            f"expected recursion cost {cost:.3g} exceeds budget {budget} (DERHAM_RANGE_BUDGET)"
        )
    bins = 1 << N

    def run(w, share):
        if share == 0:
            return np.zeros(bins, dtype=np.int64)
        depths = sample_depths(u, N, share, worker_rng(seed, w))
        return np.bincount(depths, minlength=bins)

    shares = partition(count, workers)
    if workers == 1:
        parts = [run(0, shares[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(workers), shares))
    counts = np.zeros(bins, dtype=np.int64)
    for p in parts:
        counts += p
    return DepthHistogram(N, counts, seed=seed, workers=workers)


# --- exact enumeration oracle ---------------------------------------------


def enumerate_exact(u: float, N: int, m_max: int = 60) -> tuple[list[float], float]:
    """``P(D_N <= k)`` for ``k = 0 .. 2^N - 1`` from skeletons with at most ``m_max`` pairs.

    Sums skeleton weights ``u^(2m-2) x^(2m-1)`` over every pair count and every
    set of minus signs (grouped by size with binomial multiplicities),
    truncating each hierarchy level at ``m_max`` pairs. No Mobius maps are
    used. Returns the truncated CDF and the exact total probability left out,
    which bounds the truncation error of every entry.
    """
    if N not in (1, 2):
        raise ValueError("enumeration is limited to N in {1, 2}")
    if m_max < 1:
        raise ValueError("m_max must be positive")
    x = x_param(u)
    weights = [u ** (2 * m - 2) * x ** (2 * m - 1) for m in range(1, m_max + 1)]

    # level-0 walk is the single step 0 -> 1: depth 0 with mass 1
    cdf, mass, missing = [1.0], 1.0, 0.0
    for level in range(1, N + 1):
        half = 1 << (level - 1)

        def below(k):
            return cdf[min(k, len(cdf) - 1)] if k >= 0 else 0.0

        new_cdf = []
        for k in range((1 << level)):
            # a +1 pair: up-walk from 0 (depth <= k), then any walk back down
            plus = below(k) * mass
            # a -1 pair: any walk down to -1, then an up-walk from -1 (depth <= k - half)
            minus = mass * below(k - half)
            final = below(k) * mass
            total = 0.0
            for m, wm in enumerate(weights, start=1):
                terms = sum(
                    math.comb(m - 1, i) * plus ** (m - 1 - i) * minus**i for i in range(m)
                )
                total += wm * terms * final
            new_cdf.append(total)
        # left out: skeletons with more than m_max pairs, plus any of the 2m
        # sub-walks falling in the previous level's left-out set
        log_kept = math.log1p(-missing)
        missing = math.exp(m_max * math.log1p(-x)) + sum(
            x * (1 - x) ** (m - 1) * -math.expm1(2 * m * log_kept) for m in range(1, m_max + 1)
        )
        mass = 1.0 - missing
        cdf = new_cdf
    return cdf, missing
