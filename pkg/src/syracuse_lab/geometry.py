"""Black/white frequency geometry on the strip [n/2] x Z and its renewal walks.

A lattice point (j, l) carries the phase

    theta(j, l) = { xi * 3^(2j-2) * (2^(1-l) mod 3^n) / 3^n }   in (-1/2, 1/2],

kept as an exact integer numerator over 3^n.  Points of the strip
1 <= j <= n/2 with |theta| <= eps are black, the rest of the strip is white,
and points off the strip are neither.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import BadEps, BadParameter, OutOfStrip, UnsupportedB, WindowTooLarge
from .stochastic import sample_pascal
from .streams import run_blocks

LOG9 = math.log(9)
LOG2 = math.log(2)
F_COND_MAX_B = 12
DEFAULT_WINDOW_BUDGET = 2_000_000


@dataclass(frozen=True)
class FreqContext:
    n: int
    xi: int
    eps: Fraction = Fraction(1, 100)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        if self.n < 1:
            raise BadParameter("n must be >= 1")
        if self.xi % 3 == 0:
            raise BadParameter("xi must not be divisible by 3")
        if not 0 < self.eps <= Fraction(1, 100):
            raise BadParameter("eps must lie in (0, 1/100]")

    @property
    def modulus(self) -> int:
        return 3 ** self.n

    @property
    def strip(self) -> int:
        """Largest j of the strip [n/2]."""
        return self.n // 2

    def in_strip(self, j: int) -> bool:
        return 1 <= j <= self.strip

    def theta_num(self, j: int, l: int) -> int:
        key = (j, l)
        hit = self._cache.get(key)
        if hit is None:
            if j < 1:
                raise BadParameter("theta needs j >= 1")
            mod = self.modulus
            t = self.xi * pow(3, 2 * j - 2, mod) * pow(2, 1 - l, mod) % mod
            hit = t - mod if 2 * t > mod else t
            self._cache[key] = hit
        return hit

    def theta(self, j: int, l: int) -> "ThetaValue":
        return ThetaValue(self.theta_num(j, l), self.n)

    def is_black_num(self, num: int) -> bool:
        # |num| / 3^n <= eps, cross-multiplied
        return abs(num) * self.eps.denominator <= self.eps.numerator * self.modulus

    def is_black(self, j: int, l: int) -> bool:
        return self.in_strip(j) and self.is_black_num(self.theta_num(j, l))

    def is_white(self, j: int, l: int) -> bool:
        return self.in_strip(j) and not self.is_black_num(self.theta_num(j, l))


@dataclass(frozen=True)
class ThetaValue:
    numerator: int
    level: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, 3 ** self.level)

    def __float__(self) -> float:
        return self.numerator / 3 ** self.level


def theta(ctx: FreqContext, j: int, l: int) -> ThetaValue:
    return ctx.theta(j, l)


def classify(ctx: FreqContext, j: int, l: int) -> str:
    """'black' or 'white' for a point of the strip."""
    if not ctx.in_strip(j):
        raise OutOfStrip(f"j={j} outside [1, {ctx.strip}]")
    return "black" if ctx.is_black_num(ctx.theta_num(j, l)) else "white"


def theta_identity_holds(ctx: FreqContext, j: int, l: int, js: int, ls: int) -> bool:
    """3^(2(js-j)) 2^(l-ls) theta(j,l) == theta(js,ls) mod 1, for j <= js and l >= ls."""
    if j > js or l < ls:
        raise BadParameter("need j <= js and l >= ls")
    lhs = ctx.theta_num(j, l) * 3 ** (2 * (js - j)) * 2 ** (l - ls)
    return (lhs - ctx.theta_num(js, ls)) % ctx.modulus == 0


def strip_bound_check(ctx: FreqContext, points: Iterable[tuple[int, int]]) -> bool:
    """Every given (black) point satisfies 3^(n+1-2j) eps >= 1/3."""
    third = Fraction(1, 3)
    return all(Fraction(3) ** (ctx.n + 1 - 2 * j) * ctx.eps >= third for j, _ in points)


@dataclass(frozen=True)
class Triangle:
    """{(j,l): j >= corner_j, l <= corner_l, (j-corner_j) log 9 + (corner_l-l) log 2 <= size}.

    ``bound`` = exp(size) as an exact rational, so membership is decided
    without floating point.
    """

    corner_j: int
    corner_l: int
    size: float
    truncated: bool = False
    bound: Optional[Fraction] = field(default=None, compare=False)

    def contains(self, j: int, l: int) -> bool:
        dj, dl = j - self.corner_j, self.corner_l - l
        if dj < 0 or dl < 0:
            return False
        if self.bound is not None:
            return 9 ** dj * 2 ** dl <= self.bound
        return dj * LOG9 + dl * LOG2 <= self.size + 1e-12

    def extent(self) -> tuple[int, int]:
        """(max j, min l) reached by the triangle."""
        if self.bound is not None:
            dj = 0
            while 9 ** (dj + 1) <= self.bound:
                dj += 1
            dl = 0
            while 2 ** (dl + 1) <= self.bound:
                dl += 1
        else:
            dj = int(self.size // LOG9)
            dl = int(self.size // LOG2)
        return self.corner_j + dj, self.corner_l - dl

    def to_json(self) -> dict:
        return {
            "corner_j": self.corner_j,
            "corner_l": self.corner_l,
            "size": self.size,
            "truncated": self.truncated,
        }


@dataclass
class Decomposition:
    triangles: list
    labels: dict  # black window point -> index into triangles
    black_count: int
    partition_ok: bool
    all_black_ok: bool
    corner_ok: bool
    min_separation: Optional[float]


def _corner(ctx: FreqContext, j: int, l: int, up_cache: dict) -> tuple[int, int]:
    """Walk up through black points, then left; returns (j_*, l_*)."""
    ls = up_cache.get((j, l))
    if ls is None:
        ls = l
        while ctx.is_black(j, ls + 1):
            ls += 1
        up_cache[(j, l)] = ls
    js = j
    while js > 1 and ctx.is_black(js - 1, ls):
        js -= 1
    return js, ls


def decompose_black(
    ctx: FreqContext,
    jmin: int,
    jmax: int,
    lmin: int,
    lmax: int,
    budget: int = DEFAULT_WINDOW_BUDGET,
) -> Decomposition:
    """Group the black points of a window into triangles and verify the grouping."""
    if not (1 <= jmin <= jmax <= ctx.strip):
        raise OutOfStrip(f"window j-range [{jmin}, {jmax}] not inside [1, {ctx.strip}]")
    if lmin > lmax:
        raise BadParameter("empty l-range")
    if lmax - lmin + 1 > 2 * 3 ** (ctx.n - 1):
        raise WindowTooLarge("window taller than the vertical period 2*3^(n-1)")
    if (jmax - jmin + 1) * (lmax - lmin + 1) > budget:
        raise WindowTooLarge(f"window exceeds {budget} points")

    black = [
        (j, l)
        for j in range(jmin, jmax + 1)
        for l in range(lmin, lmax + 1)
        if ctx.is_black_num(ctx.theta_num(j, l))
    ]
    up_cache: dict = {}
    groups: dict[tuple[int, int], list] = {}
    for p in black:
        groups.setdefault(_corner(ctx, *p, up_cache), []).append(p)

    triangles = []
    labels = {}
    for idx, ((cj, cl), pts) in enumerate(sorted(groups.items())):
        bound = ctx.eps * ctx.modulus / abs(ctx.theta_num(cj, cl))
        size = math.log(bound.numerator) - math.log(bound.denominator)
        tri = Triangle(cj, cl, size, False, bound)
        jend, lend = tri.extent()
        truncated = cj < jmin or cl > lmax or jend > jmax or lend < lmin
        triangles.append(Triangle(cj, cl, size, truncated, bound))
        for p in pts:
            labels[p] = idx

    # Exhaustive cross-check against exact triangle membership.
    partition_ok = True
    all_black_ok = True
    black_set = set(black)
    for j in range(jmin, jmax + 1):
        for l in range(lmin, lmax + 1):
            inside = [i for i, t in enumerate(triangles) if t.contains(j, l)]
            if (j, l) in black_set:
                if inside != [labels[(j, l)]]:
                    partition_ok = False
            elif inside:
                all_black_ok = False
    corner_ok = all(ctx.is_black(t.corner_j, t.corner_l) and not ctx.is_black(t.corner_j, t.corner_l + 1)
                    for t in triangles)
    return Decomposition(
        triangles, labels, len(black), partition_ok, all_black_ok, corner_ok, _min_separation(labels)
    )


def _min_separation(labels: dict) -> Optional[float]:
    if len(set(labels.values())) < 2:
        return None
    pts = np.array(list(labels.keys()), dtype=float)
    lab = np.array(list(labels.values()))
    best = math.inf
    for i in range(len(pts)):
        other = lab != lab[i]
        if other.any():
            d = np.sqrt(((pts[other] - pts[i]) ** 2).sum(axis=1)).min()
            best = min(best, float(d))
    return best


def neighbourhood_violations(
    ctx: FreqContext, dec: Decomposition, jmin: int, jmax: int, lmin: int, lmax: int, radius: float = 2.0
) -> list[tuple[int, int]]:
    """Window points outside every triangle, within `radius` of one, that are not white."""
    r = int(math.floor(radius))
    bad = []
    black_pts = list(dec.labels)
    near = set()
    for j, l in black_pts:
        for dj in range(-r, r + 1):
            for dl in range(-r, r + 1):
                if dj * dj + dl * dl <= radius * radius:
                    near.add((j + dj, l + dl))
    for j, l in sorted(near):
        if not (jmin <= j <= jmax and lmin <= l <= lmax) or (j, l) in dec.labels:
            continue
        if any(t.contains(j, l) for t in dec.triangles):
            continue
        if not ctx.is_white(j, l):
            bad.append((j, l))
    return bad


def grid_rows(ctx: FreqContext, jmin: int, jmax: int, lmin: int, lmax: int):
    """(j, l, color, theta_num) for every point of a window in the strip."""
    for j in range(jmin, jmax + 1):
        for l in range(lmin, lmax + 1):
            yield j, l, classify(ctx, j, l), ctx.theta_num(j, l)


def f_cond(ctx: FreqContext, j: int, l: int, b: int) -> complex:
    """E[chi(x (2^a2 + 3)) | a1 + a2 = b] at x = 3^(2j-2) 2^(-l).

    Given a1 + a2 = b the pair is uniform over the b-1 splittings.
    """
    if b < 2:
        raise BadParameter("b must be >= 2")
    if b > F_COND_MAX_B:
        raise UnsupportedB(f"b={b} beyond enumeration ceiling {F_COND_MAX_B}")
    mod = ctx.modulus
    base = pow(3, 2 * j - 2, mod) * pow(2, -l, mod) % mod
    total = 0j
    for a2 in range(1, b):
        k = ctx.xi * base * (2 ** a2 + 3) % mod
        total += complex(math.cos(2 * math.pi * k / mod), -math.sin(2 * math.pi * k / mod))
    return total / (b - 1)


def sample_hold(rng: np.random.Generator, size=None):
    """(index, partial sum) at the first iid Pascal draw equal to 3."""
    count = 1 if size is None else int(size)
    j = np.zeros(count, dtype=np.int64)
    l = np.zeros(count, dtype=np.int64)
    active = np.arange(count)
    while active.size:
        b = sample_pascal(rng, active.size)
        j[active] += 1
        l[active] += b
        active = active[b != 3]
    if size is None:
        return int(j[0]), int(l[0])
    return j, l


def renewal_first_passage(s: int, rng: np.random.Generator, size=None):
    """Walk by iid Hold steps from the origin until the second coordinate exceeds s."""
    if s < 0:
        raise BadParameter("s must be >= 0")
    count = 1 if size is None else int(size)
    j = np.zeros(count, dtype=np.int64)
    l = np.zeros(count, dtype=np.int64)
    active = np.arange(count)
    while active.size:
        dj, dl = sample_hold(rng, active.size)
        j[active] += dj
        l[active] += dl
        active = active[l[active] <= s]
    if size is None:
        return int(j[0]), int(l[0])
    return j, l


@dataclass
class HoldStats:
    samples: int
    mean_j: float
    mean_l: float
    p_first_is_3: float  # P(Hold = (1, 3))
    count_first_is_3: int


def hold_statistics(samples: int, seed: int = 0, threads: int = 1) -> HoldStats:
    def block(rng, size):
        j, l = sample_hold(rng, size)
        return int(j.sum()), int(l.sum()), int(np.count_nonzero((j == 1) & (l == 3)))

    parts = run_blocks(block, samples, seed, key=(0x48,), threads=threads)
    sj, sl, c13 = (sum(col) for col in zip(*parts))
    return HoldStats(samples, sj / samples, sl / samples, c13 / samples, c13)


@dataclass
class RenewalStats:
    s: int
    samples: int
    mean_j: float
    mean_l: float
    mean_overshoot: float
    p_overshoot_gt_20: float
    overshoot_counts: dict  # overshoot l - s -> count


def renewal_statistics(s: int, samples: int, seed: int = 0, threads: int = 1) -> RenewalStats:
    """Aggregate exit positions of :func:`renewal_first_passage` walks."""

    def block(rng, size):
        return renewal_first_passage(s, rng, size)

    parts = run_blocks(block, samples, seed, key=(0x4E, s), threads=threads)
    j = np.concatenate([p[0] for p in parts])
    l = np.concatenate([p[1] for p in parts])
    over = l - s
    vals, cnt = np.unique(over, return_counts=True)
    return RenewalStats(
        s,
        samples,
        float(j.mean()),
        float(l.mean()),
        float(over.mean()),
        float(np.mean(over > 20)),
        {int(v): int(c) for v, c in zip(vals, cnt)},
    )


def _white_counts(ctx: FreqContext, j0: np.ndarray, l0: np.ndarray, rng, include_start: bool = True):
    """Whites visited by walks (j0,l0) + Hold_1 + ... until they leave the strip."""
    j = np.array(j0, dtype=np.int64)
    l = np.array(l0, dtype=np.int64)
    counts = np.zeros(j.size, dtype=np.int64)
    if include_start:
        counts += [ctx.is_white(int(a), int(b)) for a, b in zip(j, l)]
    active = np.flatnonzero(j <= ctx.strip)
    while active.size:
        dj, dl = sample_hold(rng, active.size)
        j[active] += dj
        l[active] += dl
        active = active[j[active] <= ctx.strip]
        if active.size:
            counts[active] += [ctx.is_white(int(a), int(b)) for a, b in zip(j[active], l[active])]
    return counts


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return float("nan"), float("nan")
    mean = math.fsum(values) / values.size
    if values.size < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (values.size - 1)
    return mean, math.sqrt(var / values.size)


def estimate_Q(ctx: FreqContext, j: int, l: int, samples: int, seed: int = 0, threads: int = 1, key=(0,)):
    """Monte Carlo (mean, stderr) of E prod_k exp(-eps^3 1_W((j,l) + v_[1,k])), k >= 0."""
    if samples < 1:
        raise BadParameter("need samples >= 1")
    e3 = float(ctx.eps) ** 3

    def block(rng, size):
        return np.exp(-e3 * _white_counts(ctx, np.full(size, j), np.full(size, l), rng))

    return _mean_stderr(np.concatenate(run_blocks(block, samples, seed, key=(0x51, *key), threads=threads)))


@dataclass
class QRecursion:
    point: tuple
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float

    @property
    def z(self) -> float:
        joint = math.hypot(self.lhs_stderr, self.rhs_stderr)
        diff = abs(self.lhs - self.rhs)
        return 0.0 if diff == 0 else (diff / joint if joint > 0 else math.inf)


def q_recursion_check(ctx: FreqContext, j: int, l: int, samples: int, seed: int = 0, threads: int = 1) -> QRecursion:
    """Estimate Q(j,l) and exp(-eps^3 1_W(j,l)) E Q((j,l) + Hold) on independent streams."""
    e3 = float(ctx.eps) ** 3
    lhs, lse = estimate_Q(ctx, j, l, samples, seed, threads, key=(j, l, 0))
    own = math.exp(-e3 * ctx.is_white(j, l))

    def block(rng, size):
        dj, dl = sample_hold(rng, size)
        return own * np.exp(-e3 * _white_counts(ctx, j + dj, l + dl, rng))

    vals = np.concatenate(run_blocks(block, samples, seed, key=(0x52, j, l, 1), threads=threads))
    rhs, rse = _mean_stderr(vals)
    return QRecursion((j, l), lhs, lse, rhs, rse)


def white_hit_bound(ctx: FreqContext, samples: int, seed: int = 0, threads: int = 1):
    """Monte Carlo (mean, stderr) of exp(-eps^3 #{j <= n/2 : b_j = 3, (j, b_[1,j]) white})."""
    eps = float(ctx.eps)
    if math.cos(math.pi * eps) > math.exp(-eps ** 3):
        raise BadEps(f"cos(pi eps) > exp(-eps^3) for eps={ctx.eps}")
    half = ctx.strip
    e3 = eps ** 3

    def block(rng, size):
        if half == 0:
            return np.ones(size)
        b = sample_pascal(rng, (size, half))
        cum = np.cumsum(b, axis=1)
        counts = np.zeros(size, dtype=np.int64)
        rows, cols = np.nonzero(b == 3)
        for r, c in zip(rows, cols):
            counts[r] += ctx.is_white(int(c) + 1, int(cum[r, c]))
        return np.exp(-e3 * counts)

    vals = np.concatenate(run_blocks(block, samples, seed, key=(0x57,), threads=threads))
    return _mean_stderr(vals)


@dataclass
class WalkTrace:
    start: tuple
    increments: list  # [(j_k, l_k), ...]
    annotations: list = field(default_factory=list)  # [(point, color, triangle index or None)]

    def points(self) -> list[tuple[int, int]]:
        pts = [self.start]
        for dj, dl in self.increments:
            pts.append((pts[-1][0] + dj, pts[-1][1] + dl))
        return pts


def trace_walk(
    ctx: FreqContext,
    start: tuple[int, int],
    rng: np.random.Generator,
    triangles: Sequence[Triangle] = (),
    max_steps: int = 10_000,
) -> WalkTrace:
    """One renewal walk from `start` until it leaves the strip, annotated per visited point."""
    trace = WalkTrace(tuple(start), [])
    j = start[0]
    for _ in range(max_steps):
        if j > ctx.strip:
            break
        step = sample_hold(rng)
        trace.increments.append(step)
        j += step[0]
    for p in trace.points():
        if ctx.in_strip(p[0]):
            color = classify(ctx, *p)
            tri = next((i for i, t in enumerate(triangles) if t.contains(*p)), None)
        else:
            color, tri = "outside", None
        trace.annotations.append((p, color, tri))
    return trace
