import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nmvm.errors import ParameterError, UtilityRangeError
from nmvm.utility import (Exponential, HendersonHobson, PiecewiseLinear, Sahara, ShortfallPower,
                          TruncatedLinear, certainty_equivalent, utility_from_dict,
                          validate_assumption1)

ASSUMPTION1 = [Exponential(1.0), Exponential(0.15), Sahara(1.5, 5.0), Sahara(2.0, 1.0, 0.3),
               Sahara(3.5, 2.5), HendersonHobson(0.1), HendersonHobson(2.0), ShortfallPower(2.0)]


def test_examples():
    assert HendersonHobson(0.7).eval(0.0) == 0.0
    assert ShortfallPower(2.0).eval(-3.0) == -9.0
    assert ShortfallPower(2.0).eval(5.0) == 0.0
    assert Sahara(2.0, 1.0).eval(0.0) == pytest.approx(-2.0 / 3.0, rel=1e-15)
    assert Exponential(2.0).eval(0.5) == pytest.approx(-math.exp(-1.0))
    assert TruncatedLinear(3.0).eval(-1.0) == 0.0 and TruncatedLinear(3.0).eval(5.0) == 3.0
    assert PiecewiseLinear(1.0, 2.0).eval(-1.0) == -2.0


@pytest.mark.parametrize("u", [Sahara(2.0, 1.0), Sahara(1.5, 5.0, 0.4), Sahara(1.0, 2.0),
                               Sahara(0.5, 1.5)])
def test_sahara_matches_integrated_marginal_utility(u):
    # U(w) - U(0) equals the integral of b^-a exp(-a asinh((w - delta)/b))
    for w in (-7.0, -1.0, 0.5, 3.0, 20.0):
        integral = integrate.quad(lambda t: float(u.derivative(t)), 0.0, w, epsabs=0,
                                  epsrel=1e-12, limit=200)[0]
        assert float(u.eval(w) - u.eval(0.0)) == pytest.approx(integral, rel=1e-9, abs=1e-12)


def test_sahara_tails_are_stable():
    u = Sahara(1.5, 5.0)
    assert math.isfinite(float(u.eval(-1e12))) and float(u.eval(-1e12)) < -1e5
    assert -1e-4 < float(u.eval(1e12)) < 0.0
    assert np.all(np.diff(u.eval(np.linspace(-1e3, 1e3, 10001))) > 0)


def test_henderson_hobson_limits():
    u = HendersonHobson(0.1)
    assert float(u.eval(1e15)) == pytest.approx(10.0, rel=1e-12)
    assert float(u.eval(-1e3)) == pytest.approx((1 - 100 - math.sqrt(1 + 1e4)) / 0.1)


@pytest.mark.parametrize("u", ASSUMPTION1)
def test_assumption1_passes(u):
    rep = validate_assumption1(u)
    assert rep.ok, rep.failures
    assert u.assumption1


def test_assumption1_failures():
    rep = validate_assumption1(TruncatedLinear(2.0))
    assert not rep.diverges_at_minus_inf and not rep.ok
    assert not TruncatedLinear(2.0).assumption1
    rep = validate_assumption1(PiecewiseLinear(1.0, 2.0))
    assert not rep.bounded_above
    assert not Sahara(0.8, 1.0).assumption1
    assert not validate_assumption1(Sahara(0.8, 1.0)).bounded_above


def test_flags():
    assert not TruncatedLinear(1.0).concave
    assert PiecewiseLinear(1.0, 2.0).concave and not PiecewiseLinear(2.0, 1.0).concave
    assert not ShortfallPower(2.0).strictly_concave
    assert Sahara(1.5, 5).left_tail_power == 2.5
    assert Exponential(1.0).left_tail_power is None


def test_parameter_validation():
    for bad in (lambda: Exponential(0.0), lambda: Sahara(1.0, -1.0), lambda: ShortfallPower(1.0),
                lambda: HendersonHobson(-0.1), lambda: Sahara(1.0, 1.0, math.inf)):
        with pytest.raises(ParameterError):
            bad()


def test_round_trip():
    for u in ASSUMPTION1 + [TruncatedLinear(3.0), PiecewiseLinear(1.0, 2.0)]:
        assert utility_from_dict(u.to_dict()) == u
    with pytest.raises(ParameterError):
        utility_from_dict({"family": "power", "params": {}})
    with pytest.raises(ParameterError):
        utility_from_dict({"family": "sahara", "params": {"a": 1.0}})


def test_certainty_equivalent_exponential_analytic():
    u = Exponential(0.5)
    for eu in (-0.9, -0.1, -2.5):
        assert certainty_equivalent(u, eu) == pytest.approx(-math.log(-eu) / 0.5, abs=1e-8)


@pytest.mark.parametrize("u", ASSUMPTION1[1:])
def test_certainty_equivalent_inverts(u):
    for w in (-3.0, 0.0, 5.0, 12.0):
        eu = float(u.eval(w))
        ce = certainty_equivalent(u, eu)
        assert float(u.eval(ce)) == pytest.approx(eu, abs=1e-8, rel=1e-8)
        if u.strictly_concave:
            assert ce == pytest.approx(w, abs=1e-6)


def test_certainty_equivalent_plateau_takes_smallest():
    assert certainty_equivalent(ShortfallPower(2.0), 0.0) == pytest.approx(0.0, abs=1e-6)
    assert certainty_equivalent(TruncatedLinear(2.0), 2.0) == pytest.approx(2.0, abs=1e-6)


def test_certainty_equivalent_out_of_range():
    with pytest.raises(UtilityRangeError, match="exceeds"):
        certainty_equivalent(HendersonHobson(0.1), 10.5)
    with pytest.raises(UtilityRangeError):
        certainty_equivalent(Exponential(1.0), math.nan)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 10.0), st.floats(-5.0, 5.0),
       st.floats(-50.0, 50.0), st.floats(0.01, 10.0))
def test_sahara_increasing_and_concave(a, b, delta, w, h):
    u = Sahara(a, b, delta)
    lo, mid, hi = (float(u.eval(t)) for t in (w - h, w, w + h))
    assert lo < mid < hi
    assert mid >= 0.5 * (lo + hi) - 1e-12 * (1 + abs(lo) + abs(hi))
