import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speedmeasure._calculus import integrate_polynomial, integrate_power, polyval, shift, trim

coeffs = st.lists(st.floats(-5, 5), min_size=1, max_size=5)


def test_trim_drops_trailing_zeros():
    assert trim([1.0, 2.0, 0.0, 0.0]).tolist() == [1.0, 2.0]
    assert trim([0.0]).tolist() == [0.0]


def test_integrate_polynomial_simple():
    # ∫_0^2 x dx = 2
    assert integrate_polynomial((0.0, 1.0), 0.0, 0.0, 2.0) == pytest.approx(2.0)
    # ∫_1^3 (x-1)^2 dx = 8/3
    assert integrate_polynomial((0.0, 0.0, 1.0), 1.0, 1.0, 3.0) == pytest.approx(8 / 3)


def test_integrate_polynomial_unbounded():
    assert integrate_polynomial((2.0,), 0.0, 0.0, math.inf) == math.inf
    assert integrate_polynomial((0.0,), 0.0, 0.0, math.inf) == 0.0


def test_integrate_power_tail():
    # ∫_1^∞ x^-3 dx = 1/2; ∫_1^∞ x·x^-3 dx = 1
    assert integrate_power(1.0, -3.0, 0.0, (1.0,), 0.0, 1.0, math.inf) == pytest.approx(0.5)


@given(coeffs, st.floats(-3, 3), st.floats(-3, 3))
def test_shift_preserves_values(c, o1, o2):
    c2 = shift(c, o1, o2)
    for x in (-1.0, 0.0, 0.7, 2.0):
        assert polyval(c2, o2, x) == pytest.approx(polyval(c, o1, x), rel=1e-9, abs=1e-8)


@settings(max_examples=50)
@given(coeffs, st.floats(-2, 2), st.floats(0.01, 2))
def test_integral_matches_numpy(c, u, w):
    v = u + w
    P = np.polynomial.Polynomial(c).integ()
    assert integrate_polynomial(c, 0.0, u, v) == pytest.approx(P(v) - P(u), rel=1e-9, abs=1e-9)
