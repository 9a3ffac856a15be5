import math

import numpy as np
import pytest

from speedmeasure import SpeedMeasure, validate
from speedmeasure.estimate import (
    BoundaryAbsorbingError,
    detect_absorbing,
    estimate_boundary_atom,
    estimate_interior,
)
from speedmeasure.fixtures import HALF_LINE, UNIT
from speedmeasure.simulate import ChainSimulator

GRID = np.linspace(0.0, 1.0, 21)


@pytest.fixture(scope="module")
def flat_estimate():
    m = SpeedMeasure.lebesgue(UNIT, 2.0)
    sim = ChainSimulator(m, 0.01, extra_nodes=tuple(GRID))
    return estimate_interior(sim, GRID, 2000, 5)


def test_flat_density_recovered(flat_estimate):
    assert np.all(np.abs(flat_estimate.density - 2.0) < 0.2)


def test_pooled_mean_unbiased(flat_estimate):
    d, se = flat_estimate.density, flat_estimate.density_se
    pooled = math.sqrt(np.sum(se**2)) / d.size
    assert abs(d.mean() - 2.0) < 3 * pooled


def test_estimate_is_valid_measure(flat_estimate):
    assert validate(flat_estimate.measure) == []
    d = flat_estimate.to_dict()
    assert len(d["stderr_per_cell"]) == 19 and d["seed"] == 5


def test_sticky_cell_excess(sticky_half):
    sim = ChainSimulator(sticky_half, 0.01, extra_nodes=tuple(GRID))
    est = estimate_interior(sim, GRID, 2000, 6)
    i = est.cell_index(0.5)
    assert est.cell_mass[i] - 2 * 0.05 == pytest.approx(1.0, rel=0.15)


def test_insufficient_samples(two_leb):
    sim = ChainSimulator(two_leb, 0.05)
    with pytest.raises(ValueError, match="insufficient samples"):
        estimate_interior(sim, GRID, 0, 1)


def test_degenerate_grid(two_leb):
    sim = ChainSimulator(two_leb, 0.05)
    with pytest.raises(ValueError, match="degenerate grid"):
        estimate_interior(sim, [0.2, 0.2, 0.4], 10, 1)


def _half_line(w):
    return SpeedMeasure.lebesgue(HALF_LINE, 2.0, left_boundary_weight=w)


def _boundary_estimate(w, seed):
    grid = np.linspace(0.0, 1.5, 31)[1:]
    sim = ChainSimulator(_half_line(w), 0.01, window=(0.0, 2.0), extra_nodes=tuple(grid))
    interior = estimate_interior(sim, grid, 1000, seed)
    return sim, estimate_boundary_atom(sim, "left", 1.0, 4000, seed, interior)


def test_boundary_weight_zero():
    _, est = _boundary_estimate(0.0, 3)
    assert est.weight < 0.05
    assert est.exit_mean == pytest.approx(1.0, abs=0.05)


def test_boundary_weight_half():
    _, est = _boundary_estimate(0.5, 4)
    assert est.weight == pytest.approx(0.5, rel=0.15)


def test_detect_absorbing_examples():
    for w, expected in ((math.inf, True), (0.0, False), (5.0, False)):
        sim = ChainSimulator(_half_line(w), 0.02, window=(0.0, 2.0))
        assert detect_absorbing(sim, "left", 1.0, t=None if w != 5.0 else 200.0, n=300, seed=2) is expected


def test_absorbing_boundary_errors():
    sim = ChainSimulator(_half_line(math.inf), 0.02, window=(0.0, 2.0))
    grid = np.linspace(0.0, 1.5, 16)[1:]
    interior = estimate_interior(ChainSimulator(_half_line(0.0), 0.02, window=(0.0, 2.0), extra_nodes=tuple(grid)),
                                 grid, 50, 1)
    with pytest.raises(BoundaryAbsorbingError, match="boundary absorbing"):
        estimate_boundary_atom(sim, "left", 1.0, 100, 1, interior)


def test_boundary_side_must_be_closed():
    m = SpeedMeasure.lebesgue(HALF_LINE, 2.0)
    with pytest.raises(ValueError):
        detect_absorbing(ChainSimulator(m, 0.05, window=(0.0, 2.0)), "right", 1.0)
