import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from syracuse_lab import geometry as geo
from syracuse_lab.errors import BadParameter, OutOfStrip, UnsupportedB, WindowTooLarge
from syracuse_lab.streams import substream

EPS = Fraction(1, 100)


def theta_oracle(n, xi, j, l):
    """Signed fractional part of xi 3^(2j-2) 2^(1-l) / 3^n as a Fraction."""
    mod = 3 ** n
    two = Fraction(2) ** (1 - l)
    val = Fraction(xi * 3 ** (2 * j - 2)) * two / mod
    # reduce mod 1 using the 3-adic inverse of the power of two
    num = xi * 3 ** (2 * j - 2) * pow(2, 1 - l, mod) % mod
    frac = Fraction(num, mod)
    if frac > Fraction(1, 2):
        frac -= 1
    # the two readings differ by an integer only when 2^(1-l) is integral
    if l <= 1:
        assert (val - frac).denominator == 1
    return frac


def test_small_theta_values():
    ctx = geo.FreqContext(2, 1, EPS)
    assert ctx.theta(1, 1).value == Fraction(1, 9)
    assert ctx.theta(1, 0).value == Fraction(2, 9)
    assert geo.classify(ctx, 1, 1) == "white"
    with pytest.raises(OutOfStrip):
        geo.classify(ctx, 2, 0)


def test_context_validation():
    with pytest.raises(BadParameter):
        geo.FreqContext(10, 3)
    with pytest.raises(BadParameter):
        geo.FreqContext(10, 1, Fraction(1, 50))
    with pytest.raises(BadParameter):
        geo.FreqContext(0, 1)


@given(st.integers(2, 30), st.integers(1, 200), st.data())
@settings(max_examples=200)
def test_theta_matches_oracle(n, xi, data):
    if xi % 3 == 0:
        xi += 1
    j = data.draw(st.integers(1, max(1, n // 2)))
    l = data.draw(st.integers(-300, 300))
    ctx = geo.FreqContext(n, xi, EPS)
    want = theta_oracle(n, xi, j, l)
    assert ctx.theta(j, l).value == want
    if ctx.in_strip(j):
        assert ctx.is_black(j, l) == (abs(want) <= EPS)


@given(st.integers(2, 25), st.integers(1, 12), st.integers(-500, 500))
def test_vertical_periodicity(n, j, l):
    ctx = geo.FreqContext(n, 7, EPS)
    period = 2 * 3 ** (n - 1)
    assert ctx.theta_num(j, l) == ctx.theta_num(j, l + period)


@given(st.integers(1, 20), st.integers(0, 19), st.integers(-200, 200), st.integers(0, 200))
def test_theta_identity(j, dj, l, dl):
    ctx = geo.FreqContext(40, 7, EPS)
    assert geo.theta_identity_holds(ctx, j, l, j + dj, l - dl)


def test_triangle_membership():
    t = geo.Triangle(2, 10, math.log(40), bound=Fraction(40))
    assert t.contains(2, 10) and t.contains(3, 8) and t.contains(2, 5)
    assert not t.contains(3, 7)  # 9 * 8 = 72 > 40
    assert not t.contains(1, 10) and not t.contains(2, 11)
    assert t.extent() == (3, 5)


def test_decomposition_reference_window():
    ctx = geo.FreqContext(40, 7, EPS)
    dec = geo.decompose_black(ctx, 1, 20, 0, 300)
    assert dec.partition_ok and dec.all_black_ok and dec.corner_ok
    assert dec.black_count == sum(ctx.is_black(j, l) for j in range(1, 21) for l in range(0, 301))
    assert geo.strip_bound_check(ctx, dec.labels)
    assert geo.neighbourhood_violations(ctx, dec, 1, 20, 0, 300) == []
    assert dec.min_separation is not None and dec.min_separation > 1


@pytest.mark.parametrize("n,xi", [(12, 1), (18, 5), (24, 2)])
def test_decomposition_other_windows(n, xi):
    ctx = geo.FreqContext(n, xi, EPS)
    dec = geo.decompose_black(ctx, 1, n // 2, -50, 150)
    assert dec.partition_ok and dec.all_black_ok and dec.corner_ok


def test_decomposition_errors():
    ctx = geo.FreqContext(10, 1, EPS)
    with pytest.raises(OutOfStrip):
        geo.decompose_black(ctx, 1, 6, 0, 10)
    with pytest.raises(WindowTooLarge):
        geo.decompose_black(ctx, 1, 5, 0, 10 ** 6)


def test_grid_rows():
    ctx = geo.FreqContext(40, 7, EPS)
    rows = list(geo.grid_rows(ctx, 1, 2, 0, 2))
    assert rows[0] == (1, 0, "black", 14)
    assert len(rows) == 6


def test_f_cond_matches_cosine():
    ctx = geo.FreqContext(40, 7, EPS)
    rng = substream(0, 77)
    for _ in range(200):
        j, l = int(rng.integers(1, 21)), int(rng.integers(-300, 300))
        f = geo.f_cond(ctx, j, l, 3)
        assert abs(abs(f) - abs(math.cos(math.pi * float(ctx.theta(j, l))))) < 1e-10
    with pytest.raises(UnsupportedB):
        geo.f_cond(ctx, 1, 1, 13)
    with pytest.raises(BadParameter):
        geo.f_cond(ctx, 1, 1, 1)


def test_hold_statistics():
    st_ = geo.hold_statistics(200_000, seed=4)
    assert abs(st_.mean_j - 4) < 0.05 and abs(st_.mean_l - 16) < 0.2
    assert abs(st_.p_first_is_3 - 0.25) < 0.005


def test_renewal_matches_exact_oracle():
    over, mean_j = oracles.renewal_overshoot_exact(100, horizon=500)
    stats = geo.renewal_statistics(100, 50_000, seed=2)
    assert abs(stats.mean_j - mean_j) < 0.5
    p20 = 1 - sum(v for r, v in over.items() if r <= 20)
    se = math.sqrt(p20 * (1 - p20) / 50_000)
    assert abs(stats.p_overshoot_gt_20 - p20) < 5 * se


def test_renewal_thread_independent():
    a = geo.renewal_statistics(50, 40_000, seed=1, threads=1)
    b = geo.renewal_statistics(50, 40_000, seed=1, threads=3)
    assert a == b


def test_q_estimates():
    ctx = geo.FreqContext(40, 7, EPS)
    est, se = geo.estimate_Q(ctx, 3, 50, 5000, seed=1)
    assert 0 < est <= 1 and se >= 0
    rec = geo.q_recursion_check(ctx, 1, 0, 5000, seed=1)
    assert rec.z < 3


def test_white_hit_bound_is_a_probability_weight():
    ctx = geo.FreqContext(10, 1, EPS)
    est, se = geo.white_hit_bound(ctx, 5000, seed=0)
    assert 0 < est <= 1


def test_trace_walk():
    ctx = geo.FreqContext(40, 7, EPS)
    dec = geo.decompose_black(ctx, 1, 20, 0, 300)
    tr = geo.trace_walk(ctx, (1, 0), substream(6), dec.triangles)
    pts = tr.points()
    assert pts[0] == (1, 0) and pts[-1][0] > ctx.strip
    assert all(p[0] <= ctx.strip for p in pts[:-1])
    assert len(tr.annotations) == len(pts)
    assert tr.annotations[-1][1] == "outside"
    for p, color, tri in tr.annotations[:-1]:
        assert color == geo.classify(ctx, *p)
        if tri is not None:
            assert dec.triangles[tri].contains(*p)
