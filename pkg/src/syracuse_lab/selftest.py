"""Exact (Monte-Carlo-free) consistency checks, run by ``syracuse-lab selftest``."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import core, distributions as dists, geometry, stochastic

KNOWN_LEVEL1 = (Fraction(0), Fraction(1, 3), Fraction(2, 3))
KNOWN_LEVEL2 = tuple(Fraction(v, 63) for v in (0, 8, 16, 0, 11, 4, 0, 2, 22))


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def _dist_tables(corrupt: bool) -> Callable[[int], dists.Dist3Adic]:
    cache: dict[int, dists.Dist3Adic] = {}

    def get(n: int) -> dists.Dist3Adic:
        if n not in cache:
            d = dists.syracuse_dist_exact(n)
            if corrupt and n == 2:
                p = list(d.probs)
                p[1], p[2] = p[2], p[1]
                d = dists.Dist3Adic(2, tuple(p))
            cache[n] = d
        return cache[n]

    return get


def check_tables(dist) -> CheckResult:
    ok = dist(1).probs == KNOWN_LEVEL1 and dist(2).probs == KNOWN_LEVEL2
    return CheckResult("level-1/level-2 reference tables", ok)


def check_projection(dist, top: int = 7) -> CheckResult:
    for n in range(top + 1):
        d = dist(n)
        if d.total() != 1:
            return CheckResult("projection consistency", False, f"mass at level {n} is {d.total()}")
        if n >= 1 and any(d.probs[y] for y in range(0, d.modulus, 3)):
            return CheckResult("projection consistency", False, f"mass on multiples of 3 at level {n}")
        for k in range(n + 1):
            if dists.project(d, k).probs != dist(k).probs:
                return CheckResult("projection consistency", False, f"project({n}, {k}) != dist({k})")
    return CheckResult("projection consistency", True, f"0 <= k <= n <= {top}")


def check_oscillation(dist, top: int = 7) -> CheckResult:
    for n in range(top + 1):
        if dists.oscillation(dist(n), n) != 0:
            return CheckResult("oscillation values", False, f"Osc_{{{n},{n}}} != 0")
    # direct evaluation of the defining sum on the reference table
    table = KNOWN_LEVEL2
    direct = sum(abs(table[y] - Fraction(1, 3) * sum(table[z] for z in range(9) if z % 3 == y % 3)) for y in range(9))
    got = dists.oscillation(dist(2), 1)
    return CheckResult("oscillation values", got == direct == Fraction(10, 21), f"Osc_{{1,2}} = {got}")


def check_characters(dist) -> CheckResult:
    c1 = dists.char_sum(dist(1), 1)
    c0 = [dists.char_sum(dist(n), 0) for n in range(5)]
    ok = abs(abs(c1) - 3 ** -0.5) <= 1e-12 and all(c == 1 for c in c0)
    return CheckResult("character values", ok, f"|char(1,1)| = {abs(c1)!r}")


def check_char_osc(dist, top: int = 6) -> CheckResult:
    worst = -math.inf
    for n in range(1, top + 1):
        rep = dists.char_osc_inequality_check(n, dist=dist(n))
        worst = max(worst, rep.max_excess)
        if not rep.ok:
            return CheckResult("char-vs-osc inequality", False, f"level {n}: excess {rep.max_excess}")
    return CheckResult("char-vs-osc inequality", True, f"max excess {worst:.3g}")


def check_decay_probe() -> CheckResult:
    peak = {}
    for n in (4, 12):
        d = dists.syracuse_dist_float(n)
        peak[n] = max(abs(dists.char_sum(d, xi)) for xi in dists.FIXED_PROBES)
    return CheckResult("character decay probe", peak[12] < peak[4], f"{peak[12]:.3g} < {peak[4]:.3g}")


def check_residue_counting(n: int = 4, m: int = 14) -> CheckResult:
    tm = stochastic.exact_valuation_distribution(n, m)
    bad = [a for a, c in tm.counts.items() if sum(a) <= m - 2 and c != 2 ** (m - 1 - sum(a))]
    expected = sum(math.comb(s - 1, n - 1) for s in range(n, m - 1))
    seen = sum(1 for a in tm.counts if sum(a) <= m - 2)
    ok = not bad and seen == expected
    return CheckResult("residue-class counting", ok, f"{seen} tuples with |a| <= {m - 2}")


def check_valuation_tv() -> CheckResult:
    lo = stochastic.tv_valuation_vs_geom(4, 20).tv
    hi = stochastic.tv_valuation_vs_geom(4, 10).tv
    return CheckResult("valuation TV monotone", lo < hi, f"tv(4,20)={lo} tv(4,10)={hi}")


def check_injectivity(pairs: int = 20_000, seed: int = 0) -> CheckResult:
    rnd = random.Random(seed)
    seen: dict = {}
    for _ in range(pairs):
        n = rnd.randint(1, 12)
        a = tuple(rnd.randint(1, 30) for _ in range(n))
        f = core.offset(a)
        prev = seen.setdefault((n, f), a)
        if prev != a:
            return CheckResult("offset injectivity", False, f"{prev} and {a} collide")
    return CheckResult("offset injectivity", True, f"{len(seen)} distinct tuples")


def check_affine_identity(count: int = 1000, seed: int = 0) -> CheckResult:
    rnd = random.Random(seed)
    for _ in range(count):
        n = rnd.randrange(1, 10 ** 30) | 1
        a = core.syracuse_valuation(n, 20)
        img = core.affine_apply(a, n)
        if not img.is_odd_integer() or img.numerator != core.syr_iterate(n, 20):
            return CheckResult("orbit/affine identity", False, f"N={n}")
    return CheckResult("orbit/affine identity", True, f"{count} odd N <= 10^30")


def check_triangles() -> CheckResult:
    ctx = geometry.FreqContext(40, 7, Fraction(1, 100))
    dec = geometry.decompose_black(ctx, 1, 20, 0, 300)
    ok = dec.partition_ok and dec.all_black_ok and dec.corner_ok and geometry.strip_bound_check(ctx, dec.labels)
    rnd = random.Random(0)
    for _ in range(2000):
        j, js = sorted(rnd.randint(1, 20) for _ in range(2))
        ls, l = sorted(rnd.randint(-200, 400) for _ in range(2))
        ok = ok and geometry.theta_identity_holds(ctx, j, l, js, ls)
    return CheckResult("triangle decomposition", ok, f"{len(dec.triangles)} triangles, {dec.black_count} black points")


def check_white_cancellation() -> CheckResult:
    ctx = geometry.FreqContext(40, 7, Fraction(1, 100))
    rnd = random.Random(1)
    bound = math.exp(-float(ctx.eps) ** 3)
    worst = 0.0
    for _ in range(300):
        j, l = rnd.randint(1, 20), rnd.randint(-300, 300)
        f = abs(geometry.f_cond(ctx, j, l, 3))
        worst = max(worst, abs(f - math.cos(math.pi * float(ctx.theta(j, l)))))
        if ctx.is_white(j, l) and f > bound:
            return CheckResult("white cancellation", False, f"|f| > exp(-eps^3) at {(j, l)}")
    return CheckResult("white cancellation", worst <= 1e-10, f"max deviation {worst:.2e}")


def run_selftest(corrupt: bool = False, progress: Optional[Callable[[CheckResult], None]] = None) -> list[CheckResult]:
    dist = _dist_tables(corrupt)
    checks = [
        lambda: check_tables(dist),
        lambda: check_projection(dist),
        lambda: check_oscillation(dist),
        lambda: check_characters(dist),
        lambda: check_char_osc(dist),
        check_decay_probe,
        check_residue_counting,
        check_valuation_tv,
        check_injectivity,
        check_affine_identity,
        check_triangles,
        check_white_cancellation,
    ]
    results = []
    for check in checks:
        res = check()
        results.append(res)
        if progress:
            progress(res)
    return results
