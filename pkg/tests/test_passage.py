import math

import numpy as np
import pytest
from scipy.stats import chisquare

import oracles
from syracuse_lab import passage
from syracuse_lab.errors import BadParameter, EmptyRange
from syracuse_lab.streams import substream


def test_first_passage_examples():
    def tl(*args):
        out = passage.first_passage(*args)
        return out.time, out.location

    assert tl(1, 1, 10) == (0, 1)
    assert tl(3, 1, 10) == (2, 1)
    assert tl(7, 10, 50) == (0, 7)
    out = passage.first_passage(27, 1, 3)
    assert out.exhausted and out.location == 1


def test_first_passage_matches_brute_force():
    for n in range(1, 2001, 2):
        out = passage.first_passage(n, 100, 500)
        k, m = 0, n
        while m > 100:
            m = oracles.syracuse_by_halving(m)
            k += 1
        assert (out.time, out.location) == (k, m)


def test_vectorised_matches_scalar():
    rng = substream(4)
    ns = passage.sample_log_uniform(10 ** 6, 10 ** 9, rng, 5000)
    caps = np.full(ns.size, 40)
    t, loc, top = passage.first_passage_many(ns, 1000.0, caps)
    for i in range(0, ns.size, 7):
        out = passage.first_passage(int(ns[i]), 1000.0, 40)
        assert (t[i], loc[i], top[i]) == (-1 if out.time is None else out.time, out.location, out.trajectory_max)


def test_vectorised_overflow_lanes():
    big = np.array([2 ** 62 + 1, 3], dtype=np.int64)
    t, loc, _ = passage.first_passage_many(big, 10.0, np.array([2000, 10]))
    out = passage.first_passage(2 ** 62 + 1, 10.0, 2000)
    assert (t[0], loc[0]) == (out.time, out.location)
    assert (t[1], loc[1]) == (0, 3)


def test_log_uniform_chi_square():
    draws = passage.sample_log_uniform(1, 41, substream(8), 200_000)
    odd = np.arange(1, 42, 2)
    p = 1 / odd
    observed = np.array([np.count_nonzero(draws == k) for k in odd])
    assert chisquare(observed, p / p.sum() * draws.size).pvalue > 1e-4


def test_log_uniform_rejection_path():
    # span beyond the exact table: compare decade masses with the 1/N law
    lo, hi = 10 ** 3, 10 ** 12
    draws = passage.sample_log_uniform(lo, hi, substream(9), 200_000)
    assert np.all(draws % 2 == 1) and draws.min() >= lo and draws.max() <= hi
    decades = np.floor(np.log10(draws)).astype(int)
    observed = np.bincount(decades, minlength=12)[3:12]
    assert chisquare(observed).pvalue > 1e-4


def test_log_uniform_errors():
    with pytest.raises(EmptyRange):
        passage.sample_log_uniform(4, 4, substream(0))
    with pytest.raises(BadParameter):
        passage.sample_log_uniform(0, 9, substream(0))


def test_config_validation():
    with pytest.raises(BadParameter):
        passage.ExperimentConfig(1)
    with pytest.raises(BadParameter):
        passage.ExperimentConfig(100, alpha=1.0)
    cfg = passage.ExperimentConfig(1e4)
    assert cfg.y_values == (1e4 ** 1.25, 1e4 ** 1.5625)


def test_experiment_reproducible_and_thread_independent():
    cfg = passage.ExperimentConfig(1e4, samples=20_000, seed=3)
    a = passage.passage_experiment(cfg, threads=1)
    b = passage.passage_experiment(cfg, threads=3)
    for ra, rb in zip(a.runs, b.runs):
        assert np.array_equal(ra.n, rb.n) and np.array_equal(ra.location, rb.location)
    assert a.summary() == b.summary()
    assert passage.passage_support_check(a, recheck=200)
    assert passage.minimality_spot_check(a, 200)


def test_predicted_time_tracks_observed():
    cfg = passage.ExperimentConfig(1e4, samples=20_000, seed=1)
    rep = passage.passage_experiment(cfg)
    assert 0.8 < rep.median_time_ratio() < 1.2


def test_orbit_decay_fraction():
    ns = passage.sample_log_uniform(10 ** 12, 10 ** 15, substream(2), 500)
    frac = passage.orbit_decay_fraction(ns, 30, 10 ** 12)
    assert frac > 0.9
    assert passage.orbit_decay_fraction([], 5, 10.0) == 1.0


def test_default_cap():
    assert passage.default_cap(10 ** 6) == math.ceil(10 * math.log(10 ** 6) / math.log(4 / 3))
