import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from speedmeasure import Atom, GreenKind, SpeedMeasure, expected_exit_time, green
from speedmeasure.fixtures import HALF_LINE, UNIT
from speedmeasure.measures import integrate
from speedmeasure.green import green_function


def test_green_examples():
    assert green(GreenKind.open(0, 1), 0.5, 0.5) == pytest.approx(0.25)
    assert green(GreenKind.open(0, 1), 0.0, 0.3) == 0.0
    assert green(GreenKind.left_reflected(0, 1), 0.0, 0.0) == pytest.approx(1.0)
    assert green(GreenKind.right_reflected(0, 1), 1.0, 0.25) == pytest.approx(0.25)


def test_expected_exit_examples(two_leb, sticky_half):
    k = GreenKind.open(0, 1)
    for x in (0.1, 0.3, 0.5, 0.9):
        assert expected_exit_time(two_leb, k, x) == pytest.approx(x * (1 - x))
    assert expected_exit_time(sticky_half, k, 0.5) == pytest.approx(0.5)
    assert expected_exit_time(sticky_half, k, 0.0) == 0.0
    assert expected_exit_time(sticky_half, k, 1.0) == 0.0


def test_reflected_exit_time(two_leb):
    assert expected_exit_time(two_leb, GreenKind.left_reflected(0, 1), 0.0) == pytest.approx(1.0)
    for w in (0.0, 0.5):
        m = SpeedMeasure.lebesgue(HALF_LINE, 2.0, left_boundary_weight=w)
        # b^2 - x^2 plus the boundary atom w·G(x, l) = w·(b - x)
        assert expected_exit_time(m, GreenKind.left_reflected(0, 1), 0.0) == pytest.approx(1.0 + w)
        assert expected_exit_time(m, GreenKind.left_reflected(0, 1), 0.5) == pytest.approx(0.75 + 0.5 * w)


def test_absorbing_boundary_in_domain(two_leb):
    m = two_leb.replace(left_boundary_weight=math.inf)
    assert expected_exit_time(m, GreenKind.left_reflected(0, 1), 0.3) == math.inf


def test_chain_holding_example(sticky_half):
    # mean holding at 0.5 for h = 0.1: h^2 + 1·(h/2)
    assert expected_exit_time(sticky_half, GreenKind.open(0.4, 0.6), 0.5) == pytest.approx(0.06)


def test_domain_outside_interval(two_leb):
    with pytest.raises(ValueError):
        expected_exit_time(two_leb, GreenKind.open(-1, 1), 0.0)
    with pytest.raises(ValueError):
        expected_exit_time(SpeedMeasure.lebesgue(HALF_LINE, 2.0), GreenKind.right_reflected(0, 1), 0.5)


def test_green_function_matches_pointwise():
    k = GreenKind.open(0.2, 0.9)
    g = green_function(k, 0.4)
    for y in (0.2, 0.3, 0.4, 0.6, 0.9):
        assert g(y) == pytest.approx(green(k, 0.4, y))


unit = st.floats(0.0, 1.0)


@given(unit, unit, unit, unit)
def test_green_symmetric(a, b, x, y):
    a, b = sorted((a, b))
    assume(b - a > 1e-6)
    x, y = a + x * (b - a), a + y * (b - a)
    for k in (GreenKind.open(a, b), GreenKind.left_reflected(a, b), GreenKind.right_reflected(a, b)):
        assert green(k, x, y) == pytest.approx(green(k, y, x), abs=1e-12)


@given(unit, unit, unit, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_green_domain_monotone(a, b, x, da, db):
    a, b = sorted((a, b))
    assume(b - a > 1e-6)
    xx = a + x * (b - a)
    yy = a + (1 - x) * (b - a)
    assert green(GreenKind.open(a, b), xx, yy) <= green(GreenKind.open(a - da, b + db), xx, yy) + 1e-12


@given(st.floats(0.5, 4.0), st.floats(0.05, 0.95), st.floats(0.0, 3.0), st.floats(0.01, 0.99))
def test_exit_time_additive(c, at, w, x):
    dens = SpeedMeasure.lebesgue(UNIT, c)
    both = dens.with_atoms(Atom(at, w))
    atom_only = green(GreenKind.open(0, 1), x, at) * w
    k = GreenKind.open(0, 1)
    assert expected_exit_time(both, k, x) == pytest.approx(expected_exit_time(dens, k, x) + atom_only)
    assert expected_exit_time(dens, k, x) == pytest.approx(integrate(dens, green_function(k, x)))
