import json

import numpy as np
import pytest

from speedmeasure.converge import (
    EstimatorConfig,
    SimConfig,
    converse_experiment,
    speed_sense_check,
    stone_forward,
)
from speedmeasure.fixtures import (
    constant_sequence,
    exponential_boundary_sequence,
    persistent_atom_sequence,
    plain_normal_sequence,
    scaled_sequence,
    sticky_boundary_sequence,
    sticky_point_sequence,
)

SIM = SimConfig(n_paths=2000, seed=3)


def test_speed_sense_constant():
    s = constant_sequence()
    r = speed_sense_check(s.measures, s.limit)
    assert r.distances == [0.0] * 5 and r.verdict


def test_speed_sense_exponential_boundary_layer():
    s = exponential_boundary_sequence()
    r = speed_sense_check(s.measures, s.limit, indices=s.ns)
    assert r.verdict
    assert set(r.per_index[0]["details"]["families"]) == {"interior", "left"}


def test_speed_sense_plain_normal_to_dirac():
    s = plain_normal_sequence()
    assert speed_sense_check(s.measures, s.limit, indices=s.ns).verdict


def test_speed_sense_negative_control():
    s = persistent_atom_sequence()
    assert not speed_sense_check(s.measures, s.limit).verdict


def test_speed_sense_sorts_by_index():
    s = sticky_point_sequence()
    r = speed_sense_check(s.measures[::-1], s.limit, indices=s.ns[::-1])
    assert r.ns == list(s.ns)
    assert r.distances == sorted(r.distances, reverse=True)


def test_speed_sense_interval_mismatch():
    s = sticky_point_sequence()
    with pytest.raises(ValueError):
        speed_sense_check(s.measures, sticky_boundary_sequence().limit)


def test_stone_constant_sequence():
    s = constant_sequence(ns=(1, 2, 3))
    r = stone_forward(s.measures, s.limit, 0.5, SIM, s.ns)
    assert r.verdict
    assert max(r.distances) <= r.tolerances["threshold"]


def test_stone_scaled_sequence():
    s = scaled_sequence(ns=(1, 2, 4, 8, 16, 32))
    r = stone_forward(s.measures, s.limit, 0.5, SIM, s.ns)
    assert r.verdict
    assert r.notes["hypothesis_speed_sense"]


def test_stone_persistent_atom_fails():
    s = persistent_atom_sequence(ns=(1, 2, 4))
    r = stone_forward(s.measures, s.limit, 0.5, SIM, s.ns)
    assert not r.verdict
    assert "hypothesis_failure" in r.notes


def test_stone_report_deterministic():
    s = sticky_point_sequence(ns=(1, 4))
    cfg = SimConfig(n_paths=300, seed=5)
    a = stone_forward(s.measures, s.limit, 0.5, cfg, s.ns).to_dict()
    b = stone_forward(s.measures, s.limit, 0.5, SimConfig(n_paths=300, seed=5, threads=4), s.ns).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert "runtime" not in a


def test_report_curves():
    s = sticky_point_sequence()
    rows = speed_sense_check(s.measures, s.limit).curves()
    assert {r[2] for r in rows} == {"interior", "left", "right"}
    assert len(rows) == 3 * len(s.ns)


GRID = tuple(np.linspace(0.0, 1.0, 11).tolist())


def test_converse_constant_sequence():
    s = constant_sequence(ns=(1, 2, 3))
    cfg = EstimatorConfig(grid=GRID, h=0.02, n_per_node=1000, seed=2)
    r = converse_experiment(s.measures, s.limit, cfg, indices=s.ns)
    assert r.verdict
    # common seeds: identical measures give identical estimates
    assert r.distances == [0.0, 0.0, 0.0]


def test_converse_sticky_boundary():
    s = sticky_boundary_sequence(ns=(1, 2, 4, 8))
    grid = tuple(np.linspace(0.0, 1.5, 16).tolist())
    cfg = EstimatorConfig(grid=grid, h=0.02, n_per_node=1000, seed=3, window=(0.0, 2.0),
                          boundary={"left": 1.0}, n_boundary=4000)
    r = converse_experiment(s.measures, s.limit, cfg, indices=s.ns)
    w = [row["details"]["boundary"]["left"]["weight"] for row in r.per_index]
    w0 = r.notes["limit_estimate"]["boundary"]["left"]["weight"]
    assert w[0] > w[-1]
    assert abs(w[-1] - w0) < abs(w[0] - w0)
    assert abs(w0 - 0.5) < 0.1
