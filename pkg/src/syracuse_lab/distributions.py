"""Exact and floating-point laws of the Syracuse random variables mod 3^n.

The level-raising step  X_{n+1} = (3 X_n + 1) / 2^a,  a ~ Geom(2),  is
evaluated in discrete-log coordinates: 2 is a primitive root mod 3^{n+1},
so every unit is 2^k for a unique k mod T = 2*3^n, division by 2^a is the
shift k -> k - a, and the wrapped geometric weights obey a first-order
recurrence around the cycle.  One level therefore costs O(3^n) instead of
the O(9^n) of summing the residue-class formula entry by entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.signal import lfilter

from .errors import BadLevel, LevelTooLarge
from .streams import substream

EXACT_CEILING = 8
FLOAT_CEILING = 15
DEFAULT_BUDGET_MB = 2048
FIXED_PROBES = (1, 2, 5, 7)


@dataclass(frozen=True)
class Dist3Adic:
    """Exact probability table on Z/3^level Z."""

    level: int
    probs: tuple  # tuple[Fraction, ...] of length 3**level

    @property
    def modulus(self) -> int:
        return 3 ** self.level

    def __getitem__(self, y: int) -> Fraction:
        return self.probs[y]

    def total(self) -> Fraction:
        return sum(self.probs, Fraction(0))


@dataclass(frozen=True, eq=False)
class Dist3AdicFloat:
    """Double-precision probability table on Z/3^level Z."""

    level: int
    probs: np.ndarray

    @property
    def modulus(self) -> int:
        return 3 ** self.level

    def __getitem__(self, y: int) -> float:
        return float(self.probs[y])

    def total(self) -> float:
        return math.fsum(self.probs)

    def __eq__(self, other):
        return (
            isinstance(other, Dist3AdicFloat)
            and self.level == other.level
            and np.array_equal(self.probs, other.probs)
        )


Dist = Union[Dist3Adic, Dist3AdicFloat]


def _powers_of_two(mod: int, count: int) -> np.ndarray:
    """2^k mod `mod` for k < count, as int64 (needs mod < 2**31 for exact products)."""
    out = np.empty(count, dtype=np.int64)
    block = 1
    out[0] = 1 % mod
    while block < count:
        step = pow(2, block, mod)
        take = min(block, count - block)
        out[block:block + take] = out[:take] * step % mod
        block += take
    return out


def _exact_step(nums: list[int], den: int, n: int) -> tuple[list[int], int]:
    """Raise a common-denominator table from level n to n+1."""
    mod = 3 ** (n + 1)
    period = 2 * 3 ** n
    pow2 = [1] * period
    for k in range(1, period):
        pow2[k] = pow2[k - 1] * 2 % mod
    # f[k] = P(3X_n + 1 = 2^k); only even k give residues = 1 mod 3
    f = [nums[(pow2[k] - 1) // 3] if k % 2 == 0 else 0 for k in range(period)]
    # G[k] = sum_{r=1}^{T} 2^{T-r} f[k+r]; new denominator den * (2^T - 1)
    g0 = 0
    for r in range(1, period + 1):
        g0 += f[r % period] << (period - r)
    G = [0] * period
    G[0] = g0
    half = 1 << (period - 1)
    cur = g0
    for k in range(0, -period + 1, -1):
        fk = f[k % period]
        cur = ((cur - fk) >> 1) + half * fk
        G[(k - 1) % period] = cur
    out = [0] * mod
    for k in range(period):
        out[pow2[k]] = G[k]
    new_den = den * ((1 << period) - 1)
    common = math.gcd(new_den, *out)
    if common > 1:
        out = [v // common for v in out]
        new_den //= common
    return out, new_den


def _exact_table(n: int) -> tuple[list[int], int]:
    nums, den = [1], 1
    for level in range(n):
        nums, den = _exact_step(nums, den, level)
    return nums, den


def syracuse_dist_exact(n: int, max_level: int = EXACT_CEILING) -> Dist3Adic:
    """Exact law of F_n(Geom(2)^n) mod 3^n as a table of Fractions."""
    if n < 0:
        raise BadLevel("level must be >= 0")
    if n > max_level:
        raise LevelTooLarge(f"exact level {n} exceeds ceiling {max_level}")
    nums, den = _exact_table(n)
    return Dist3Adic(n, tuple(Fraction(v, den) for v in nums))


def _float_step(p: np.ndarray, n: int) -> np.ndarray:
    mod = 3 ** (n + 1)
    period = 2 * 3 ** n
    pow2 = _powers_of_two(mod, period)
    f = np.zeros(period)
    even = pow2[0::2]
    f[0::2] = p[(even - 1) // 3]
    # g[0] directly; 2^-r underflows to 0 past r ~ 1075 so the tail is dropped.
    r = np.arange(1, min(period, 1100) + 1)
    g0 = math.fsum(np.ldexp(f[r % period], -r)) / (1.0 - 2.0 ** -period)
    # g[k-1] = (g[k] + f[k]) / 2, walked backwards from g[0] around the cycle.
    g = np.empty(period)
    g[0] = g0
    if period > 1:
        x = f[(1 - np.arange(1, period)) % period]
        h, _ = lfilter([0.5], [1.0, -0.5], x, zi=[0.5 * g0])
        g[(-np.arange(1, period)) % period] = h
    out = np.zeros(mod)
    out[pow2] = g
    return out


def float_memory_mb(n: int) -> float:
    # pow2 + f + g + output table, all 8-byte words
    return 8 * (3 * 2 * 3 ** max(n - 1, 0) + 3 ** n) / 2 ** 20


def syracuse_dist_float(
    n: int, max_level: int = FLOAT_CEILING, budget_mb: float = DEFAULT_BUDGET_MB
) -> Dist3AdicFloat:
    """Same recursion in double precision, for levels beyond the exact ceiling."""
    if n < 0:
        raise BadLevel("level must be >= 0")
    if n > max_level or float_memory_mb(n) > budget_mb:
        raise LevelTooLarge(f"float level {n} exceeds ceiling {max_level} / budget {budget_mb} MB")
    p = np.ones(1)
    for level in range(n):
        p = _float_step(p, level)
    return Dist3AdicFloat(n, p)


def project(dist: Dist, k: int) -> Dist:
    """Push the law forward along Z/3^n -> Z/3^k."""
    if not 0 <= k <= dist.level:
        raise BadLevel(f"cannot project level {dist.level} to level {k}")
    mk = 3 ** k
    if isinstance(dist, Dist3AdicFloat):
        return Dist3AdicFloat(k, dist.probs.reshape(-1, mk).sum(axis=0))
    nums, den = _common_denominator(dist.probs)
    fibres = [0] * mk
    for y, v in enumerate(nums):
        fibres[y % mk] += v
    return Dist3Adic(k, tuple(Fraction(v, den) for v in fibres))


def _common_denominator(probs: Sequence[Fraction]) -> tuple[list[int], int]:
    den = math.lcm(*(p.denominator for p in probs))
    return [p.numerator * (den // p.denominator) for p in probs], den


def oscillation(dist: Dist, m: int):
    """Total deviation of the table from its averages over cosets of 3^m Z/3^n Z.

    Exact (a Fraction) for :class:`Dist3Adic`, a float otherwise.
    """
    n = dist.level
    if not 0 <= m <= n:
        raise BadLevel(f"scale {m} outside [0, {n}]")
    mm = 3 ** m
    width = 3 ** (n - m)
    if isinstance(dist, Dist3AdicFloat):
        table = dist.probs.reshape(width, mm)
        fibre = table.sum(axis=0) / width
        return float(np.abs(table - fibre).sum())
    nums, den = _common_denominator(dist.probs)
    fibres = [0] * mm
    for y, v in enumerate(nums):
        fibres[y % mm] += v
    # |c_Y - fibre/width| summed, scaled through by width*den to stay integral
    total = sum(abs(width * v - fibres[y % mm]) for y, v in enumerate(nums))
    return Fraction(total, width * den)


def char_sum(dist: Dist, xi: int) -> complex:
    """E exp(-2 pi i xi X / 3^n) for X distributed as `dist`."""
    mod = dist.modulus
    xi %= mod
    if isinstance(dist, Dist3AdicFloat):
        y = np.arange(mod, dtype=np.int64)
        phase = (xi * y) % mod
        ang = -2.0 * np.pi * phase / mod
        return complex(np.dot(dist.probs, np.cos(ang)), np.dot(dist.probs, np.sin(ang)))
    # Aggregate mass per phase exactly, so xi = 0 returns exactly 1.
    by_phase: dict[int, Fraction] = {}
    for y, p in enumerate(dist.probs):
        if p:
            k = xi * y % mod
            by_phase[k] = by_phase.get(k, Fraction(0)) + p
    re = math.fsum(float(p) * math.cos(-2 * math.pi * k / mod) for k, p in by_phase.items())
    im = math.fsum(float(p) * math.sin(-2 * math.pi * k / mod) for k, p in by_phase.items())
    return complex(re, im)


def all_char_sums(dist: Dist) -> np.ndarray:
    """Character sums at every xi in Z/3^n Z at once (a length-3^n FFT)."""
    p = np.array([float(v) for v in dist.probs]) if isinstance(dist, Dist3Adic) else dist.probs
    return np.fft.fft(p)


@dataclass
class CharOscReport:
    level: int
    oscillation: Fraction
    max_abs_char: float
    max_excess: float  # max over admissible xi of |char| - Osc; <= tol means the bound holds
    checked: int
    ok: bool


def char_osc_inequality_check(n: int, tol: float = 1e-9, dist: Dist3Adic | None = None) -> CharOscReport:
    """Check |char_sum(xi)| <= Osc_{n-1,n} for every xi not divisible by 3."""
    if n < 1:
        raise BadLevel("need n >= 1")
    dist = dist if dist is not None else syracuse_dist_exact(n)
    osc = oscillation(dist, n - 1)
    chars = np.abs(all_char_sums(dist))
    xi = np.arange(dist.modulus)
    admissible = chars[xi % 3 != 0]
    excess = float(admissible.max() - float(osc))
    return CharOscReport(n, osc, float(admissible.max()), excess, int(admissible.size), excess <= tol)


def probe_frequencies(n: int, extra: int = 0, rng: np.random.Generator | None = None) -> list[int]:
    """Fixed probes {1,2,5,7} plus `extra` random ones, reduced mod 3^n, coprime to 3."""
    mod = 3 ** n
    if mod == 1:
        return [0]
    out = []
    for xi in FIXED_PROBES:
        r = xi % mod
        if r % 3 and r not in out:
            out.append(r)
    if extra:
        if rng is None:
            raise ValueError("random probes need an rng")
        tries = 0
        target = len(out) + extra
        admissible = mod - mod // 3
        while len(out) < min(target, admissible) and tries < 100 * extra:
            r = int(rng.integers(1, mod))
            tries += 1
            if r % 3 and r not in out:
                out.append(r)
    return out


def char_probe_table(
    levels: Iterable[int],
    extra: int = 0,
    seed: int = 0,
    xis: Sequence[int] | None = None,
    max_level: int = FLOAT_CEILING,
    budget_mb: float = DEFAULT_BUDGET_MB,
) -> list[dict]:
    """Rows {n, xi, re, im, abs} of character sums on the float path."""
    rows = []
    for n in levels:
        rng = substream(seed, 0xC4, n)
        dist = syracuse_dist_float(n, max_level=max_level, budget_mb=budget_mb)
        if xis is None:
            probes = probe_frequencies(n, extra, rng)
        else:
            probes = [x for x in xis if x % 3 or n == 0]
            rejected = [x for x in xis if not (x % 3 or n == 0)]
            if rejected:
                raise ValueError(f"frequencies divisible by 3 are not admissible: {rejected}")
        for xi in probes:
            c = char_sum(dist, xi)
            rows.append({"n": n, "xi": xi, "re": c.real, "im": c.imag, "abs": abs(c)})
    return rows


def to_csv_rows(dist: Dist) -> list[tuple]:
    if isinstance(dist, Dist3Adic):
        return [(y, p.numerator, p.denominator) for y, p in enumerate(dist.probs)]
    return [(y, repr(float(p))) for y, p in enumerate(dist.probs)]

