import math

import numpy as np
import pytest

from speedmeasure import validate
from speedmeasure.fixtures import (
    _exp_density,
    _normal_density,
    cubic_tail,
    exponential_boundary,
    exponential_decay,
    normal_spike,
    surrogate_error,
)

SURROGATE_TOL = 1e-4


@pytest.mark.parametrize("n", [10.0, 100.0, 1000.0, 10000.0])
def test_exponential_boundary_surrogate(n):
    m = exponential_boundary(n)
    f = lambda x: 1.0 + _exp_density(n)(x)
    assert surrogate_error(m, f, 0.0, 2.0) < SURROGATE_TOL * n
    assert surrogate_error(m, f, 0.0, 20.0 / n) < SURROGATE_TOL * n
    assert validate(m) == []


@pytest.mark.parametrize("n", [1e2, 1e4, 1e6])
def test_normal_spike_surrogate(n):
    m = normal_spike(n)
    s = 1 / math.sqrt(n)
    f = lambda x: 1.0 + _normal_density(1.0 / n)(x)
    assert surrogate_error(m, f, -8 * s, 8 * s) < SURROGATE_TOL * math.sqrt(n)
    assert validate(m) == []


@pytest.mark.parametrize("n", [10.0, 1000.0])
def test_exponential_decay_surrogate(n):
    m = exponential_decay(n)
    f = lambda x: np.exp(-np.abs(x) / n)
    assert surrogate_error(m, f, -256.0, 256.0) < SURROGATE_TOL
    assert validate(m) == []


@pytest.mark.parametrize("growth", [0.0, 1e-4, 1e-2, 0.1])
def test_cubic_tail_surrogate(growth):
    m = cubic_tail(growth=growth)
    f = lambda x: np.exp(growth * np.abs(x)) / np.maximum(np.abs(x) ** 3, 1.0)
    assert surrogate_error(m, f, -64.0, 64.0) < SURROGATE_TOL
    assert validate(m) == []
