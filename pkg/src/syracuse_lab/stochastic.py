"""Geometric and Pascal samplers, total variation, and the exact valuation oracle.

Total variation here is the *unnormalised* sum  sum_r |P(r) - Q(r)|,
twice the usual half-normalised distance: point masses at different
outcomes are at distance 2.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import BadParameter, BudgetExceeded, SpaceMismatch

VALUATION_MAX_M = 24


def geom_pmf(mu, a: int):
    """P(Geom(mu) = a); exact Fraction when mu is an int or Fraction."""
    if mu <= 1:
        raise BadParameter("Geom(mu) needs mu > 1")
    if a < 1:
        return 0
    if isinstance(mu, (int, Fraction)):
        mu = Fraction(mu)
        return (1 / mu) * ((mu - 1) / mu) ** (a - 1)
    return (1.0 / mu) * ((mu - 1.0) / mu) ** (a - 1)


def sample_geom(mu: float, rng: np.random.Generator, size=None):
    """Inverse-CDF draw(s) from Geom(mu) on {1, 2, ...}."""
    if mu <= 1:
        raise BadParameter("Geom(mu) needs mu > 1")
    u = 1.0 - rng.random(size)  # in (0, 1]
    a = np.ceil(np.log(u) / math.log1p(-1.0 / mu))
    a = np.maximum(a, 1).astype(np.int64)
    return int(a) if size is None else a


def pascal_pmf(b: int) -> Fraction:
    """P(Pascal = b) = (b-1)/2^b on b >= 2."""
    return Fraction(b - 1, 1 << b) if b >= 2 else Fraction(0)


def sample_pascal(rng: np.random.Generator, size=None):
    """Sum of two independent Geom(2) draws."""
    a1 = sample_geom(2, rng, size)
    a2 = sample_geom(2, rng, size)
    return a1 + a2


def g_weight(n: float, x) -> float:
    """exp(-|x|^2/n) + exp(-|x|), with the n = 0 term read as exp(-inf) = 0."""
    if n < 0:
        raise BadParameter("n must be >= 0")
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    gauss = math.exp(-r * r / n) if n > 0 else 0.0
    return gauss + math.exp(-r)


Distribution = Union[Mapping, Sequence, np.ndarray]


def _aligned(p: Distribution, q: Distribution):
    if isinstance(p, Mapping) and isinstance(q, Mapping):
        keys = set(p) | set(q)
        return [p.get(k, 0) for k in keys], [q.get(k, 0) for k in keys]
    if isinstance(p, Mapping) or isinstance(q, Mapping):
        raise SpaceMismatch("cannot compare a keyed distribution with a positional one")
    if len(p) != len(q):
        raise SpaceMismatch(f"outcome spaces differ in size: {len(p)} vs {len(q)}")
    return list(p), list(q)


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def tv_distance(p: Distribution, q: Distribution):
    """sum_r |P(r) - Q(r)|  (a Fraction when both sides are exact)."""
    pv, qv = _aligned(p, q)
    if _is_exact(pv) and _is_exact(qv):
        return sum((abs(Fraction(a) - b) for a, b in zip(pv, qv)), Fraction(0))
    return math.fsum(abs(float(a) - float(b)) for a, b in zip(pv, qv))


def sup_event_gap(p: Distribution, q: Distribution):
    """sup over events E of |P(E) - Q(E)|, attained on {P > Q} or {P < Q}."""
    pv, qv = _aligned(p, q)
    exact = _is_exact(pv) and _is_exact(qv)
    diffs = [Fraction(a) - b if exact else float(a) - float(b) for a, b in zip(pv, qv)]
    pos = sum((d for d in diffs if d > 0), Fraction(0) if exact else 0.0)
    neg = sum((-d for d in diffs if d < 0), Fraction(0) if exact else 0.0)
    return max(pos, neg)


@dataclass
class EmpiricalDist:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDist":
        c = Counter(samples.tolist() if isinstance(samples, np.ndarray) else samples)
        return cls(c, sum(c.values()))

    def merge(self, other: "EmpiricalDist") -> "EmpiricalDist":
        return EmpiricalDist(self.counts + other.counts, self.total + other.total)

    def probs(self, exact: bool = False) -> dict:
        if self.total == 0:
            return {}
        if exact:
            return {k: Fraction(v, self.total) for k, v in self.counts.items()}
        return {k: v / self.total for k, v in self.counts.items()}


@dataclass
class TailMass:
    """Law of a^(n)(N) for N uniform on odd residues mod 2^m.

    ``in_range`` holds the tuples that residue classes mod 2^m determine
    (those with |a| < m); everything else is lumped into ``escaped``.
    """

    n: int
    m: int
    in_range: dict  # tuple -> Fraction
    counts: dict  # tuple -> number of odd residues attaining it
    escaped: Fraction

    def total(self) -> Fraction:
        return sum(self.in_range.values(), Fraction(0)) + self.escaped


def _valuations_vectorised(n: int, m: int):
    r = np.arange(1, 1 << m, 2, dtype=np.int64)
    vals = np.zeros((r.size, n), dtype=np.int64)
    cum = np.zeros(r.size, dtype=np.int64)
    alive = np.ones(r.size, dtype=bool)
    for k in range(n):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        v = 3 * r[idx] + 1
        low = v & -v
        a = np.log2(low).astype(np.int64)
        vals[idx, k] = a
        cum[idx] += a
        r[idx] = v // low
        alive[idx[cum[idx] >= m]] = False
    return vals, alive


def exact_valuation_distribution(n: int, m: int, max_m: int = VALUATION_MAX_M) -> TailMass:
    """Enumerate every odd residue mod 2^m and tabulate its n-Syracuse valuation.

    A residue whose running valuation sum reaches m is counted as escaped:
    past that point its class mod 2^m no longer fixes the orbit.
    """
    if n < 0 or m < 1:
        raise BadParameter("need n >= 0 and m >= 1")
    if m > max_m:
        raise BudgetExceeded(f"2^{m - 1} residues exceeds the enumeration budget (m <= {max_m})")
    residues = 1 << (m - 1)
    if n == 0:
        return TailMass(0, m, {(): Fraction(1)}, {(): residues}, Fraction(0))
    # Syracuse iterates of r < 2^m stay below 2^m * 2^n; int64 is safe while that fits.
    if m + n + 2 < 63:
        vals, alive = _valuations_vectorised(n, m)
        counts = {}
        if alive.any():
            keys, cnt = np.unique(vals[alive], axis=0, return_counts=True)
            counts = {tuple(int(a) for a in row): int(c) for row, c in zip(keys, cnt)}
        escaped = residues - int(alive.sum())
    else:
        counts, escaped = Counter(), 0
        for r in range(1, 1 << m, 2):
            acc, tup, x = 0, [], r
            for _ in range(n):
                v = 3 * x + 1
                a = (v & -v).bit_length() - 1
                acc += a
                if acc >= m:
                    break
                tup.append(a)
                x = v >> a
            if acc >= m:
                escaped += 1
            else:
                counts[tuple(tup)] += 1
        counts = dict(counts)
    in_range = {a: Fraction(c, residues) for a, c in counts.items()}
    return TailMass(n, m, in_range, counts, Fraction(escaped, residues))


def geom_sum_tail(n: int, m: int) -> Fraction:
    """P(|Geom(2)^n| >= m), exactly."""
    if n == 0:
        return Fraction(1) if m <= 0 else Fraction(0)
    inside = sum((Fraction(math.comb(s - 1, n - 1), 1 << s) for s in range(n, m)), Fraction(0))
    return 1 - inside


@dataclass
class ValuationTV:
    n: int
    m: int
    tv: Fraction
    in_range_discrepancy: Fraction
    escaped_mass_model: Fraction
    escaped_mass_geom: Fraction


def tv_valuation_vs_geom(n: int, m: int, max_m: int = VALUATION_MAX_M) -> ValuationTV:
    """TV between the enumerated valuation law and Geom(2)^n.

    The enumeration cannot resolve tuples with |a| >= m, so its escaped mass
    sits on a separate "unresolved" atom while Geom(2)^n keeps its tail on
    the individual tuples; the two tails therefore add rather than cancel.
    """
    tail = exact_valuation_distribution(n, m, max_m)
    discrepancy = Fraction(0)
    attained_geom = Fraction(0)
    for a, p in tail.in_range.items():
        q = Fraction(1, 1 << sum(a))
        attained_geom += q
        discrepancy += abs(p - q)
    geom_tail = geom_sum_tail(n, m)
    # in-range Geom mass on tuples no residue attains
    discrepancy += (1 - geom_tail) - attained_geom
    return ValuationTV(n, m, discrepancy + tail.escaped + geom_tail, discrepancy, tail.escaped, geom_tail)
