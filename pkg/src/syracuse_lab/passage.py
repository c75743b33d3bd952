"""First passage of Syracuse orbits below a threshold, and the stabilisation probe."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import syr_iterate
from .errors import BadParameter, EmptyRange
from .stochastic import EmpiricalDist, tv_distance
from .streams import run_blocks, substream

LOG43 = math.log(4 / 3)
EXACT_SPAN = 10 ** 7
# 3v + 1 must stay inside int64
_VEC_LIMIT = (2 ** 63 - 2) // 3


def default_cap(n: int) -> int:
    """10 log N / log(4/3) steps, at least one."""
    return max(1, math.ceil(10 * math.log(n) / LOG43))


@dataclass(frozen=True)
class PassageOutcome:
    """First n with Syr^n(N) <= x.

    ``time`` is None when the budget ran out; ``location`` is then 1 by the
    Syr^inf(N) := 1 convention.
    """

    time: Optional[int]
    location: int
    trajectory_max: int

    @property
    def exhausted(self) -> bool:
        return self.time is None


def first_passage(n: int, x: float, cap: Optional[int] = None) -> PassageOutcome:
    if n < 1 or not n & 1:
        raise ValueError("need an odd positive integer")
    if x < 1:
        raise BadParameter("threshold x must be >= 1")
    cap = default_cap(n) if cap is None else cap
    top = n
    for t in range(cap + 1):
        if n <= x:
            return PassageOutcome(t, n, top)
        if t == cap:
            break
        m = 3 * n + 1
        n = m >> ((m & -m).bit_length() - 1)
        if n > top:
            top = n
    return PassageOutcome(None, 1, top)


def first_passage_many(ns: np.ndarray, x: float, caps: np.ndarray):
    """Vectorised :func:`first_passage`; returns (time, location, trajectory_max).

    Exhausted lanes get time -1 and location 1.  Lanes that would overflow
    int64 are finished with Python integers.
    """
    ns = np.asarray(ns, dtype=np.int64)
    caps = np.broadcast_to(np.asarray(caps, dtype=np.int64), ns.shape)
    size = ns.size
    time = np.full(size, -1, dtype=np.int64)
    loc = np.ones(size, dtype=np.int64)
    top = ns.copy()
    cur = ns.copy()
    active = np.arange(size)
    slow = []
    step = 0
    while active.size:
        v = cur[active]
        hit = v <= x
        time[active[hit]] = step
        loc[active[hit]] = v[hit]
        keep = ~hit & (caps[active] > step)
        big = keep & (v > _VEC_LIMIT)
        slow.extend(active[big].tolist())
        active = active[keep & ~big]
        if not active.size:
            break
        w = 3 * cur[active] + 1
        w //= w & -w
        cur[active] = w
        top[active] = np.maximum(top[active], w)
        step += 1
    if slow:
        # Python-int continuation for the rare overflowing lanes
        for i in slow:
            out = first_passage(int(ns[i]), x, int(caps[i]))
            time[i] = -1 if out.time is None else out.time
            loc[i] = out.location
            top[i] = min(out.trajectory_max, np.iinfo(np.int64).max)
    return time, loc, top


@lru_cache(maxsize=8)
def _log_uniform_table(lo: int, hi: int):
    odd = np.arange(lo, hi + 1, 2, dtype=np.int64)
    cdf = np.cumsum(1.0 / odd)
    return odd, cdf


def _odd_bounds(lo, hi) -> tuple[int, int]:
    lo = int(math.ceil(lo))
    hi = int(math.floor(hi))
    if lo < 1:
        raise BadParameter("lower bound must be >= 1")
    lo += 1 - lo % 2
    hi -= 1 - hi % 2
    if lo > hi:
        raise EmptyRange(f"no odd integers in [{lo}, {hi}]")
    return lo, hi


def sample_log_uniform(lo, hi, rng: np.random.Generator, size=None):
    """Odd N in [lo, hi] with P(N) proportional to 1/N.

    Spans up to 10^7 use the exact inverse CDF; wider spans draw from the
    continuous density 1/t snapped to odd integers and accept with the
    exact correction ratio.
    """
    lo, hi = _odd_bounds(lo, hi)
    count = 1 if size is None else int(np.prod(size))
    if hi - lo <= EXACT_SPAN:
        odd, cdf = _log_uniform_table(lo, hi)
        u = rng.random(count) * cdf[-1]
        out = odd[np.minimum(np.searchsorted(cdf, u, side="right"), odd.size - 1)]
    else:
        if hi >= 2 ** 53:
            raise BadParameter("rejection path needs hi < 2^53")
        out = _log_uniform_rejection(lo, hi, rng, count)
    return int(out[0]) if size is None else out.reshape(size)


def _snap_ratio(n: np.ndarray) -> np.ndarray:
    # target 1/N over proposal log((N+2)/N); u/log1p(u) is increasing in u = 2/N
    u = 2.0 / n
    return u / np.log1p(u)


def _log_uniform_rejection(lo: int, hi: int, rng: np.random.Generator, count: int) -> np.ndarray:
    a, b = math.log(lo), math.log(hi + 2)
    bound = float(_snap_ratio(np.array([float(lo)]))[0])
    out = np.empty(0, dtype=np.int64)
    while out.size < count:
        need = count - out.size
        t = np.exp(a + (b - a) * rng.random(2 * need + 16))
        n = (np.floor((t - lo) / 2) * 2 + lo).astype(np.int64)
        n = n[(n >= lo) & (n <= hi)]
        accept = rng.random(n.size) * bound <= _snap_ratio(n.astype(float))
        out = np.concatenate([out, n[accept]])
    return out[:count]


@dataclass
class ExperimentConfig:
    x: float
    alpha: float = 1.25
    samples: int = 10 ** 5
    seed: int = 0
    cap: Optional[int] = None  # None: default_cap(N) per sample

    def __post_init__(self):
        if self.x < 2:
            raise BadParameter("x must be >= 2")
        if self.alpha <= 1:
            raise BadParameter("alpha must be > 1")
        if self.cap is not None and self.cap < 1:
            raise BadParameter("cap must be >= 1")

    @property
    def n0(self) -> int:
        return math.floor(math.log(self.x) / (10 * math.log(2)))

    @property
    def m0(self) -> int:
        return math.floor((self.alpha - 1) / 100 * math.log(self.x))

    @property
    def y_values(self) -> tuple[float, float]:
        return self.x ** self.alpha, self.x ** (self.alpha ** 2)


@dataclass
class PassageSample:
    """Per-sample arrays for one starting scale y."""

    tag: str
    y: float
    n: np.ndarray
    time: np.ndarray  # -1 when the cap was exhausted
    location: np.ndarray
    trajectory_max: np.ndarray

    def predicted_time(self, x: float) -> np.ndarray:
        return np.log(self.n / x) / LOG43

    @property
    def exhaustion_rate(self) -> float:
        return float(np.mean(self.time < 0)) if self.n.size else 0.0

    def locations(self) -> EmpiricalDist:
        return EmpiricalDist.from_samples(self.location[self.time >= 0])


@dataclass
class PassageReport:
    config: ExperimentConfig
    runs: list = field(default_factory=list)  # [PassageSample, PassageSample]

    @property
    def tv(self) -> Fraction:
        """Empirical TV between the two passage-location laws (exhausted lanes excluded)."""
        a, b = (r.locations().probs(exact=True) for r in self.runs)
        return tv_distance(a, b)

    def median_time_ratio(self) -> float:
        ratios = []
        for r in self.runs:
            pred = r.predicted_time(self.config.x)
            ok = (r.time >= 0) & (pred > 0)
            ratios.append(r.time[ok] / pred[ok])
        allr = np.concatenate(ratios) if ratios else np.empty(0)
        return float(np.median(allr)) if allr.size else float("nan")

    def summary(self) -> dict:
        return {
            "x": self.config.x,
            "alpha": self.config.alpha,
            "samples": self.config.samples,
            "seed": self.config.seed,
            "tv": float(self.tv),
            "exhaustion_rate_y1": self.runs[0].exhaustion_rate,
            "exhaustion_rate_y2": self.runs[1].exhaustion_rate,
            "median_time_ratio": self.median_time_ratio(),
            "n0": self.config.n0,
            "m0": self.config.m0,
        }

    def rows(self):
        for r in self.runs:
            pred = r.predicted_time(self.config.x)
            for i in range(r.n.size):
                yield (r.tag, int(r.n[i]), int(r.time[i]), int(r.location[i]), float(pred[i]))


def _run_scale(cfg: ExperimentConfig, tag_index: int, y: float, threads: int) -> PassageSample:
    lo, hi = y, y ** cfg.alpha

    def block(rng, size):
        ns = sample_log_uniform(lo, hi, rng, size)
        if cfg.cap is None:
            caps = np.ceil(10 * np.log(ns.astype(float)) / LOG43).astype(np.int64)
        else:
            caps = np.full(size, cfg.cap, dtype=np.int64)
        return (ns, *first_passage_many(ns, cfg.x, caps))

    parts = run_blocks(block, cfg.samples, cfg.seed, key=(tag_index,), threads=threads)
    if parts:
        cols = [np.concatenate(c) for c in zip(*parts)]
    else:
        cols = [np.empty(0, dtype=np.int64)] * 4
    return PassageSample(f"y{tag_index + 1}", y, *cols)


def passage_experiment(cfg: ExperimentConfig, threads: int = 1) -> PassageReport:
    """Sample N from Log over [y, y^alpha] for y = x^alpha and x^(alpha^2); record T_x, Pass_x."""
    report = PassageReport(cfg)
    for i, y in enumerate(cfg.y_values):
        report.runs.append(_run_scale(cfg, i, y, threads))
    return report


def passage_support_check(report: PassageReport, recheck: Optional[int] = None) -> bool:
    """Locations odd and in (x/2^64, x]; predecessors above x for the first `recheck` lanes per run."""
    x = report.config.x
    floor = x / 2.0 ** 64
    for r in report.runs:
        fin = r.time >= 0
        locs = r.location[fin]
        if np.any(locs % 2 == 0) or np.any(locs > x) or np.any(locs <= floor):
            return False
        if np.any(r.location[~fin] != 1):
            return False
        limit = r.n.size if recheck is None else min(recheck, r.n.size)
        for i in range(limit):
            if r.time[i] < 0:
                continue
            if not _predecessors_above(int(r.n[i]), int(r.time[i]), x, int(r.location[i])):
                return False
    return True


def _predecessors_above(n: int, t: int, x: float, location: int) -> bool:
    for _ in range(t):
        if n <= x:
            return False
        m = 3 * n + 1
        n = m >> ((m & -m).bit_length() - 1)
    return n == location and n <= x


def minimality_spot_check(report: PassageReport, count: int, seed: int = 0) -> bool:
    """Re-iterate a random subsample with Python integers and confirm minimality."""
    rng = substream(seed, 0xF1)
    x = report.config.x
    for r in report.runs:
        fin = np.flatnonzero(r.time >= 0)
        if not fin.size:
            continue
        pick = rng.choice(fin, size=min(count, fin.size), replace=False)
        for i in pick:
            n, t = int(r.n[i]), int(r.time[i])
            if not _predecessors_above(n, t, x, int(r.location[i])):
                return False
            if syr_iterate(n, t) != int(r.location[i]):
                return False
    return True


def orbit_decay_fraction(ns: np.ndarray, steps: int, x: float) -> float:
    """Share of N with |log Syr^n(N) - log N - n log(3/4)| <= 10 (log x)^0.6."""
    if not len(ns):
        return 1.0
    slack = 10 * math.log(x) ** 0.6
    good = 0
    for n in ns:
        n = int(n)
        dev = math.log(syr_iterate(n, steps)) - math.log(n) - steps * math.log(0.75)
        good += abs(dev) <= slack
    return good / len(ns)
