import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from nmvm.errors import ParameterError
from nmvm.mixing import (GIG, Dirac, Gamma, InverseGamma, InverseGaussian, law_from_dict,
                         log_bessel_k)

DOF = 3.228143


def test_laplace_at_zero_is_one():
    for law in (Dirac(1.0), Gamma(2, 4), InverseGamma(1.614072, 1.614072),
                InverseGaussian(1.2, 0.8), GIG(0.7, 1.3, 0.9), GIG(-1.5, 2.0, 0.0)):
        assert law.laplace(0.0) == 1.0


def test_inverse_gamma_has_no_negative_exponential_moments():
    assert InverseGamma(1.614072, 1.614072).laplace(-0.01) == math.inf


def test_gamma_closed_form_and_mc():
    law = Gamma(2, 4)
    assert law.laplace(1.0) == pytest.approx(4 / 9, rel=1e-14)
    z = law.sample(11, 10**6)
    vals = np.exp(-z)
    se = vals.std(ddof=1) / math.sqrt(z.size)
    assert abs(vals.mean() - 4 / 9) <= 3 * se


def test_critical_values():
    assert Dirac(1.0).critical_value().s_hat == -math.inf
    cv = InverseGamma(DOF / 2, DOF / 2).critical_value()
    assert cv.s_hat == 0.0 and cv.finite_at_s_hat
    cv = Gamma(2, 4).critical_value()
    assert cv.s_hat == -2.0 and not cv.finite_at_s_hat
    assert Gamma(2, 4).laplace(-2.0) == math.inf
    assert not GIG(0.0, 1.3, 0.9).critical_value().finite_at_s_hat
    assert InverseGaussian(1.0, 2.0).critical_value().finite_at_s_hat


def test_gamma_transform_blows_up_at_critical_value():
    law = Gamma(2, 4)
    vals = [law.laplace(-2.0 + eps) for eps in (1e-1, 1e-3, 1e-6)]
    assert vals[0] < vals[1] < vals[2]
    assert vals[2] > 1e10


@pytest.mark.parametrize("lam", [-0.5, -1.7, -3.0])
def test_gig_value_at_critical_value_matches_limit(lam):
    law = GIG(lam, 1.3, 0.9)
    at = law.laplace(-0.45)
    assert math.isfinite(at)
    assert law.laplace(-0.45 + 1e-9) == pytest.approx(at, rel=1e-3)
    # direct integral of the unnormalized density at s_hat
    dens = lambda z: z ** (lam - 1) * math.exp(-1.3 / (2 * z))  # noqa: E731
    norm = 2 * math.exp(log_bessel_k(lam, math.sqrt(1.3 * 0.9))) / (0.9 / 1.3) ** (lam / 2)
    val = integrate.quad(dens, 0, np.inf)[0] / norm
    assert at == pytest.approx(val, rel=1e-8)


@pytest.mark.parametrize("lam", [0.0, 0.5, 2.0])
def test_gig_nonnegative_index_is_open_at_critical_value(lam):
    law = GIG(lam, 1.3, 0.9)
    assert law.laplace(-0.45) == math.inf
    assert math.isfinite(law.laplace(-0.45 + 1e-6))


def test_moments():
    m = Dirac(1.0).moments()
    assert (m.mean, m.variance, m.sqrt_mean) == (1.0, 0.0, 1.0)
    m = InverseGamma(DOF / 2, DOF / 2).moments()
    assert m.mean == pytest.approx(DOF / (DOF - 2), rel=1e-12)
    assert m.mean == pytest.approx(2.628472, abs=1e-5)
    assert m.variance == math.inf
    m = Gamma(2, 4).moments()
    assert m.mean == pytest.approx(1.0) and m.variance == pytest.approx(0.5)
    assert InverseGamma(0.9, 1.0).moment(1.0) == math.inf


@pytest.mark.parametrize("law", [GIG(0.7, 1.3, 0.9), InverseGaussian(1.2, 0.8), GIG(-2.2, 0.6, 1.7)])
def test_gig_moments_against_numeric_integral(law):
    dens = lambda z: math.exp((law.lam - 1) * math.log(z) - 0.5 * (law.a / z + law.b * z))  # noqa
    norm = integrate.quad(dens, 0, np.inf)[0]
    for r in (0.5, 1.0, 2.0):
        val = integrate.quad(lambda z: z**r * dens(z), 0, np.inf)[0] / norm
        assert law.moment(r) == pytest.approx(val, rel=1e-8)


def test_inverse_gaussian_mean_and_shape():
    law = InverseGaussian(1.2, 0.8)
    assert law.moment(1.0) == pytest.approx(math.sqrt(1.2 / 0.8))
    # Var = mean^3 / shape
    assert law.moments().variance == pytest.approx(math.sqrt(1.5) ** 3 / 1.2)


def test_sampling():
    assert list(Dirac(3.0).sample(5, 4)) == [3.0, 3.0, 3.0, 3.0]
    z = Gamma(2, 4).sample(7, 10**6)
    var = z.var(ddof=1)
    m4 = np.mean((z - z.mean()) ** 4)
    se = math.sqrt((m4 - var**2) / z.size)
    assert abs(var - 0.5) <= 3 * se
    np.testing.assert_array_equal(Gamma(2, 4).sample(9, 5), Gamma(2, 4).sample(9, 5))


def test_inverse_gamma_sample_mean_within_three_standard_errors():
    law = InverseGamma(1.614072, 1.614072)
    z = law.sample(42, 10**6)
    # the variance is infinite, so the standard error is taken from the sample itself
    se = z.std(ddof=1) / math.sqrt(z.size)
    assert abs(z.mean() - 2.628472) <= 3 * se


@pytest.mark.parametrize("law", [Gamma(2.5, 3.0), InverseGamma(3.5, 2.0), InverseGaussian(1.2, 0.8),
                                 GIG(0.7, 1.3, 0.9), GIG(-2.0, 3.0, 0.0), GIG(1.5, 0.0, 2.0)])
def test_quadrature_reproduces_moments_and_transform(law):
    z, w = law.quadrature(256)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(w >= 0) and np.all(z > 0)
    assert w @ z == pytest.approx(law.moment(1.0), rel=1e-8)
    assert w @ np.exp(-0.7 * z) == pytest.approx(law.laplace(0.7), rel=1e-8)


def test_parameter_validation():
    with pytest.raises(ParameterError):
        GIG(1.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        GIG(0.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        GIG(-1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        Gamma(-1.0, 1.0)
    with pytest.raises(ParameterError):
        Dirac(0.0)


def test_serialization_round_trip():
    for law in (Dirac(2.0), Gamma(2, 4), InverseGamma(1.5, 2.5), InverseGaussian(1.2, 0.8),
                GIG(0.7, 1.3, 0.9)):
        back = law_from_dict(law.to_dict())
        assert type(back) is type(law) and back.params() == law.params()
    with pytest.raises(ParameterError):
        law_from_dict({"family": "cauchy", "params": {}})


def test_log_bessel_k_against_scipy_and_asymptotics():
    for nu in (-2.5, -0.5, 0.0, 0.3, 1.614, 4.0):
        for x in (1e-3, 0.1, 1.0, 10.0, 300.0):
            assert log_bessel_k(nu, x) == pytest.approx(math.log(special.kv(nu, x)), rel=1e-12,
                                                        abs=1e-12)
    # K_nu(x) ~ Gamma(nu)/2 (2/x)^nu for tiny x
    assert log_bessel_k(2.0, 1e-200) == pytest.approx(
        special.gammaln(2.0) - math.log(2) + 2 * math.log(2e200), rel=1e-12)


laws = st.one_of(
    st.builds(Gamma, st.floats(0.2, 6.0), st.floats(0.2, 6.0)),
    st.builds(InverseGamma, st.floats(0.3, 6.0), st.floats(0.2, 6.0)),
    st.builds(InverseGaussian, st.floats(0.2, 4.0), st.floats(0.2, 4.0)),
    st.builds(GIG, st.floats(-3.0, 3.0), st.floats(0.2, 4.0), st.floats(0.2, 4.0)),
    st.builds(Dirac, st.floats(0.1, 5.0)),
)


@settings(max_examples=200, deadline=None)
@given(laws, st.floats(0.01, 5.0), st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_laplace_monotone_and_log_convex(law, u1, u2, u3):
    s_hat = law.critical_value().s_hat
    base = max(s_hat, -5.0)
    s1, s2, s3 = sorted((base + u1, base + u1 + u2, base + u1 + u2 + u3))
    l1, l2, l3 = law.log_laplace(s1), law.log_laplace(s2), law.log_laplace(s3)
    assert l1 >= l2 - 1e-12 and l2 >= l3 - 1e-12
    mid = law.log_laplace(0.5 * (s1 + s3))
    assert mid <= 0.5 * (l1 + l3) + 1e-10 * (1 + abs(l1) + abs(l3))


@settings(max_examples=100, deadline=None)
@given(laws)
def test_transform_is_infinite_below_critical_value(law):
    s_hat = law.critical_value().s_hat
    if math.isfinite(s_hat):
        assert law.laplace(s_hat - 1e-3) == math.inf
        assert math.isfinite(law.laplace(s_hat + 1e-3))
