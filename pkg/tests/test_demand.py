import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mmwshare.demand import critical_mass, equilibria, fe_demand, surplus
from mmwshare.externality import ExternalityCurve

LINEAR = lambda n: np.asarray(n, dtype=float)


def test_surplus_examples():
    assert surplus(0.8, 0.5, 0.8 * 0.5, LINEAR) == 0.0
    assert surplus(1.0, 0.5, 0.25, LINEAR) == pytest.approx(0.25)
    assert surplus(0.9, 0.0, 0.01, LINEAR) < 0
    assert surplus(1.0, 0.3, 0.1, 0.5) == pytest.approx(0.4)


def test_linear_demand_shape():
    d = fe_demand(LINEAR, 1.0)
    assert np.allclose(d.p, d.n * (1 - d.n))
    assert d.price(1.0) == 0.0
    assert np.allclose(d.revenue, d.n * d.p)


def test_constant_externality_is_ordinary_good():
    d = fe_demand(lambda n: np.ones_like(np.asarray(n, float)), 2.0)
    assert np.all(np.diff(d.p) < 0)
    assert critical_mass(d) == pytest.approx(0.0, abs=1e-8)


def test_critical_mass_examples():
    assert critical_mass(fe_demand(LINEAR)) == pytest.approx(0.5, abs=1e-8)
    assert critical_mass(fe_demand(lambda n: np.asarray(n) ** 2)) == pytest.approx(2 / 3, abs=1e-8)


def test_equilibria_examples():
    d = fe_demand(LINEAR, 1.0)
    e = equilibria(d, 0.1)
    assert e.tipping == pytest.approx((1 - math.sqrt(0.6)) / 2, abs=1e-8)
    assert e.upper == pytest.approx((1 + math.sqrt(0.6)) / 2, abs=1e-8)
    assert [p.stable for p in e.points] == [True, False, True]

    assert [p.n for p in equilibria(d, 0.3).points] == [0.0]
    zero = equilibria(d, 0.0)
    assert zero.tipping == 0.0 and zero.upper == 1.0

    tangent = equilibria(d, 0.25)
    assert tangent.by_kind("tangency") == [pytest.approx(0.5, abs=1e-6)]


def test_positive_demand_at_zero_size_has_no_tipping_point():
    d = fe_demand(lambda n: 0.5 + 0.5 * np.asarray(n), 1.0)
    e = equilibria(d, 0.2)
    assert e.points[0].kind == "zero" and not e.points[0].stable
    assert e.by_kind("tipping") == []
    assert e.tipping == 0.0
    assert d.price(e.upper) == pytest.approx(0.2, abs=1e-9)


def test_monopoly_output():
    e = equilibria(fe_demand(LINEAR), 0.1)
    # d/dn [n^2 (1 - n) - 0.1 n] = 0
    assert e.monopoly_n == pytest.approx((2 + math.sqrt(4 - 1.2)) / 6, abs=1e-7)


def test_empirical_curve_interpolation():
    h = ExternalityCurve.analytic(lambda n: n, [0.0, 0.5, 1.0])
    d = fe_demand(h, 1.0)
    assert d.n.tolist() == [0.0, 0.5, 1.0]
    assert d.price(0.25) == pytest.approx(0.75 * 0.25)
    assert critical_mass(d) == pytest.approx(0.5, abs=1e-8)


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        equilibria(fe_demand(LINEAR), -0.1)


curve_values = st.lists(st.floats(0.0, 2.0), min_size=3, max_size=12)


def _curve(values):
    n = np.linspace(0, 1, len(values))
    return ExternalityCurve.analytic(lambda x: np.interp(x, n, values), n)


@settings(max_examples=80, deadline=None)
@given(curve_values, st.floats(0.5, 3.0), st.floats(0.0, 1.0))
def test_roots_sit_on_cost_and_bracket_critical_mass(values, omega, frac):
    d = fe_demand(_curve(values), omega)
    pmax = equilibria(d, 0.0).max_price
    assume(pmax > 1e-6)
    c = frac * pmax * 0.999
    e = equilibria(d, c)
    if c > 0 and d.price(0.0) < c:
        assert d.price(e.tipping) == pytest.approx(c, abs=1e-6)
        assert d.price(e.upper) == pytest.approx(c, abs=1e-6)
    assert e.tipping <= e.critical_mass + 1e-8 <= e.upper + 2e-8


@settings(max_examples=60, deadline=None)
@given(curve_values, st.floats(0.1, 10.0), st.floats(0.05, 0.9))
def test_joint_scaling_invariance(values, k, frac):
    base = _curve(values)
    scaled = _curve([k * v for v in values])
    d1, dk = fe_demand(base), fe_demand(scaled)
    assert np.allclose(dk.p, k * d1.p) and np.allclose(dk.revenue, k * d1.revenue)
    pmax = equilibria(d1, 0.0).max_price
    assume(pmax > 1e-6)
    assert critical_mass(dk) == pytest.approx(critical_mass(d1), abs=1e-7)
    c = frac * pmax
    e1, ek = equilibria(d1, c), equilibria(dk, k * c)
    assert ek.tipping == pytest.approx(e1.tipping, abs=1e-7)
    assert ek.upper == pytest.approx(e1.upper, abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(curve_values, st.lists(st.floats(0.0, 1.0), min_size=12, max_size=12), st.floats(0.05, 0.9))
def test_tipping_point_monotone_in_externality(values, bumps, frac):
    low = np.array(values)
    high = low + np.array(bumps[:len(values)])
    d_low, d_high = fe_demand(_curve(low)), fe_demand(_curve(high))
    pmax = equilibria(d_low, 0.0).max_price
    assume(pmax > 1e-6)
    c = frac * pmax
    assert equilibria(d_high, c).tipping <= equilibria(d_low, c).tipping + 1e-8
