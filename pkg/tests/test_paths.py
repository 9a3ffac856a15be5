import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speedmeasure import SpeedMeasure
from speedmeasure.fixtures import UNIT
from speedmeasure.paths import exit_stats, first_passage, ks_distance, law_distance, law_distances, reference_window
from speedmeasure.simulate import ChainSimulator, Path, PathEnsemble


def _ens(paths, x0, horizon=1.0):
    return PathEnsemble(tuple(paths), "", "test", 0, horizon, x0)


def test_first_passage_examples():
    const = Path(np.array([0.0, 1.0]), np.array([0.4, 0.4]), 0)
    assert first_passage(const, 0.4, "upper") == 0.0
    p = Path(np.array([0.0, 1.0, 2.0]), np.array([0.3, 0.5, 0.7]), 0)
    assert first_passage(p, 0.6, "upper") == 2.0
    dec = Path(np.array([0.0, 1.0, 2.0]), np.array([0.5, 0.4, 0.3]), 0)
    assert first_passage(dec, 0.6, "upper") is None
    assert first_passage(dec, 0.35, "lower") == 2.0


def test_constant_paths_all_censored():
    paths = [Path(np.array([0.0, 1.0]), np.array([0.3, 0.3]), i) for i in range(5)]
    st_ = exit_stats(_ens(paths, 0.3), 0.0, 1.0, 0.3)
    assert st_.censored_count == 5
    assert st_.p_hit_upper == 0.0


def test_exit_stats_window_mismatch():
    paths = [Path(np.array([0.0]), np.array([0.3]), 0)]
    with pytest.raises(ValueError):
        exit_stats(_ens(paths, 0.3), 0.4, 1.0, 0.3)
    with pytest.raises(ValueError):
        exit_stats(_ens(paths, 0.3), 0.0, 1.0, 0.5)


def test_ks_examples():
    assert ks_distance([1, 2, 3], [3, 2, 1]) == 0.0
    assert ks_distance([0.0] * 10, [1.0] * 10) == 1.0
    with pytest.raises(ValueError):
        ks_distance([None], [1.0])


def _ecdf_ks(a, b):
    grid = np.union1d(a, b)
    fa = np.searchsorted(np.sort(a), grid, side="right") / len(a)
    fb = np.searchsorted(np.sort(b), grid, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


samples = st.lists(st.floats(-10, 10), min_size=1, max_size=40)


@given(samples, samples)
def test_ks_matches_ecdf_and_symmetric(a, b):
    d = ks_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(_ecdf_ks(np.array(a), np.array(b)))
    assert d == pytest.approx(ks_distance(b, a))
    assert ks_distance(a, list(reversed(a))) == 0.0


@given(st.lists(st.floats(0, 1), min_size=2, max_size=30), st.floats(0, 1), st.floats(0, 1))
def test_first_passage_monotone_in_level(vals, l1, l2):
    p = Path(np.arange(len(vals), dtype=float), np.array(vals), 0)
    lo, hi = sorted((l1, l2))
    t_lo, t_hi = first_passage(p, lo), first_passage(p, hi)
    if t_hi is not None:
        assert t_lo is not None and t_lo <= t_hi


def test_same_chain_independent_draws_ks():
    m = SpeedMeasure.lebesgue(UNIT, 2.0)
    sim = ChainSimulator(m, 0.02)
    s = []
    for seed in (1, 2):
        ens = sim.simulate(0.5, math.inf, 10_000, seed, stop_window=(0.2, 0.8))
        s.append([p.times[-1] for p in ens])
    assert ks_distance(*s) < 0.03


def test_window_monotone_mean_exit(sticky_half):
    ens = ChainSimulator(sticky_half, 0.02).simulate(0.5, 20.0, 2000, 3, n_out=None)
    inner = exit_stats(ens, 0.3, 0.7, 0.5).mean_exit
    outer = exit_stats(ens, 0.2, 0.8, 0.5).mean_exit
    assert outer >= inner


def test_law_distance_examples(two_leb):
    sim = ChainSimulator(two_leb, 0.02)
    w = reference_window(two_leb.interval, 0.5)
    e1 = sim.simulate(0.5, 1.0, 10_000, 1, n_out=257)
    assert law_distance(e1, e1, window=w) == 0.0
    e2 = sim.simulate(0.5, 1.0, 10_000, 2, n_out=257)
    assert law_distance(e1, e2, window=w) < 0.03
    slow = ChainSimulator(two_leb.scaled(4.0), 0.02).simulate(0.5, 1.0, 10_000, 3, n_out=257)
    assert law_distance(e1, slow, window=w) > 0.1


def test_law_distance_horizon_mismatch(two_leb):
    sim = ChainSimulator(two_leb, 0.05)
    e1 = sim.simulate(0.5, 1.0, 5, 1, n_out=9)
    e2 = sim.simulate(0.5, 2.0, 5, 1, n_out=9)
    with pytest.raises(ValueError):
        law_distances(e1, e2, window=(0.2, 0.8))
