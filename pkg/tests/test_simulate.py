import math

import numpy as np
import pytest

from speedmeasure import Atom, SpeedMeasure
from speedmeasure.fixtures import REAL_LINE, UNIT
from speedmeasure.paths import exit_stats
from speedmeasure.simulate import (
    ChainSimulator,
    TimeChangeSimulator,
    build_grid_chain,
    path_seed,
    run_chain,
    run_timechange,
)


def test_uniform_chain(two_leb):
    h = 0.01
    ch = build_grid_chain(two_leb, h)
    inner = slice(1, -1)
    assert np.allclose(ch.up_prob[inner], 0.5)
    assert np.allclose(ch.mean_holding[inner], h * h)
    assert ch.tags == ("reflecting", "reflecting")


def test_chain_holding_at_atom(sticky_half):
    ch = build_grid_chain(sticky_half, 0.1)
    i = ch.node_index(0.5)
    assert ch.mean_holding[i] == pytest.approx(0.06)


@pytest.mark.parametrize("w", [0.0, 0.5, 3.0])
def test_chain_reflecting_end_holding(two_leb, w):
    h = 0.05
    ch = build_grid_chain(two_leb.replace(left_boundary_weight=w), h)
    assert ch.mean_holding[0] == pytest.approx(h * w + h * h)
    assert ch.up_prob[0] == 1.0


def test_chain_absorbing_end(two_leb):
    ch = build_grid_chain(two_leb.replace(left_boundary_weight=math.inf), 0.1)
    assert ch.tags[0] == "absorbing"
    assert math.isinf(ch.mean_holding[0])


def test_x0_outside_nodes(two_leb):
    with pytest.raises(ValueError):
        run_chain(build_grid_chain(two_leb, 0.1), 1.5, 1.0, 1, 0)


def test_path_seed_distinct():
    seeds = {path_seed(7, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert path_seed(7, 3) == path_seed(7, 3)
    assert path_seed(7, 3) != path_seed(8, 3)


@pytest.mark.parametrize("engine", ["chain", "timechange"])
def test_determinism_across_threads(sticky_half, engine):
    if engine == "chain":
        sim = ChainSimulator(sticky_half, 0.02)
        kw = {}
    else:
        sim = TimeChangeSimulator(sticky_half, 1e-4, 0.02)
        kw = {"n_out": 65}
    e1 = sim.simulate(0.3, 0.2, 40, 123, threads=1, **kw)
    e4 = sim.simulate(0.3, 0.2, 40, 123, threads=4, **kw)
    for p, q in zip(e1, e4):
        assert np.array_equal(p.times, q.times) and np.array_equal(p.values, q.values)
        assert p.seed == q.seed


def test_absorbed_paths_constant_after_hit(two_leb):
    m = two_leb.replace(left_boundary_weight=math.inf)
    ens = ChainSimulator(m, 0.05).simulate(0.1, 2.0, 200, 5, n_out=101)
    absorbed = [p for p in ens if p.status == "absorbed"]
    assert absorbed
    for p in absorbed:
        k = int(np.argmax(p.values <= 0.0))
        assert np.all(p.values[k:] == 0.0)


def test_timechange_absorbed_paths_constant(two_leb):
    m = two_leb.replace(left_boundary_weight=math.inf)
    ens = TimeChangeSimulator(m, 1e-4, 0.02).simulate(0.1, 1.0, 30, 5, n_out=101)
    absorbed = [p for p in ens if p.status == "absorbed"]
    assert absorbed
    for p in absorbed:
        k = int(np.argmax(p.values <= 0.0))
        assert np.all(p.values[k:] == 0.0)


def test_timechange_scaling_four_lebesgue():
    # m = 4·Lebesgue runs at half speed: Var(X_1) ≈ 1/2
    m = SpeedMeasure.lebesgue(REAL_LINE, 4.0)
    ens = run_timechange(m, 0.0, 1.0, 2000, 1e-3, 0.05, 9, n_out=3)
    v = np.var(ens.final_values())
    assert v == pytest.approx(0.5, abs=0.05)


def test_timechange_two_lebesgue_is_driver():
    # m = 2·Lebesgue: T_t = t, so X_1 is standard normal
    m = SpeedMeasure.lebesgue(REAL_LINE, 2.0)
    ens = run_timechange(m, 0.0, 1.0, 2000, 1e-3, 0.05, 10, n_out=3)
    assert np.var(ens.final_values()) == pytest.approx(1.0, abs=0.1)


def test_timechange_sticky_point_flat_segments(sticky_half):
    ens = run_timechange(sticky_half, 0.5, 0.5, 20, 1e-5, 0.01, 3, n_out=513)
    flat = 0
    for p in ens:
        at = p.values == 0.5
        flat += int(np.sum(at[1:] & at[:-1]))
    assert flat > 20 * 50


def test_chain_natural_scale(sticky_half):
    ens = ChainSimulator(sticky_half, 0.02).simulate(0.3, math.inf, 4000, 11, stop_window=(0.1, 0.8))
    st = exit_stats(ens, 0.1, 0.8, 0.3)
    p = (0.3 - 0.1) / 0.7
    assert abs(st.p_hit_upper - p) < 3 * math.sqrt(p * (1 - p) / st.n)
    assert st.censored_count == 0


def test_timechange_natural_scale(sticky_half):
    ens = run_timechange(sticky_half, 0.4, math.inf, 1000, 1e-4, 0.01, 12, stop_window=(0.2, 0.8))
    st = exit_stats(ens, 0.2, 0.8, 0.4)
    p = (0.4 - 0.2) / 0.6
    assert abs(st.p_hit_upper - p) < 3 * math.sqrt(p * (1 - p) / st.n)


def test_invalid_arguments(two_leb):
    with pytest.raises(ValueError):
        run_timechange(two_leb, 0.5, 1.0, 1, 0.0, 0.01, 0)
    with pytest.raises(ValueError):
        run_timechange(two_leb, 0.5, 1.0, 1, 1e-4, -0.01, 0)
    with pytest.raises(ValueError):
        run_chain(build_grid_chain(two_leb, 0.1), 0.5, -1.0, 1, 0)
