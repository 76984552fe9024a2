import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special as sc

from anomdiff.special import (
    DEFAULT_POLICY,
    ConvergenceError,
    EvalPolicy,
    gauss_legendre,
    kummer_1f1,
    lambert_w0,
    mittag_leffler,
    mittag_leffler_three,
    reciprocal_gamma,
)
from oracles import cf_by_inversion, hyp1f1_reference, ml_reference

TOL = DEFAULT_POLICY.abs_tol


def test_ml_at_zero():
    assert mittag_leffler(0.7, 0) == 1


def test_ml_beta_one_is_exp():
    z = 1 + 2j
    assert abs(mittag_leffler(1.0, z) - np.exp(z)) < 1e-15


def test_ml_half_erfc_closed_form():
    # E_{1/2}(z) = exp(z^2) erfc(-z)
    assert abs(mittag_leffler(0.5, -2.0) - sc.erfcx(2.0)) < 1e-14


@pytest.mark.parametrize("x", [1.0, 5.0, 20.0])
def test_ml_against_laplace_inversion(x):
    ref = cf_by_inversion("sl", 0.75, x, 1.0)
    assert abs(mittag_leffler(0.75, -x) - ref) < TOL


def test_kummer_examples():
    assert kummer_1f1(0.7, 1, 0) == 1
    assert abs(kummer_1f1(1, 1, 3 - 1j) - np.exp(3 - 1j)) < 1e-13
    ref = cf_by_inversion("drd", 0.6, 15.0, 1.0)
    assert abs(kummer_1f1(0.6, 1, -15.0) - ref) < TOL


def test_kummer_rejects_bad_b_and_overflow():
    with pytest.raises(ValueError):
        kummer_1f1(0.5, -2.0, 1.0)
    with pytest.raises(OverflowError):
        kummer_1f1(0.5, 1.0, 800.0)


def test_ml_rejects_bad_beta():
    for b in (0.0, -0.3, 1.5):
        with pytest.raises(ValueError):
            mittag_leffler(b, 1.0)


def test_prabhakar_reductions():
    z = np.array([0.3 - 2j, -4 + 1j, 2.5, -12 - 3j])
    assert np.allclose(mittag_leffler_three(1, 1, 1, z), np.exp(z), atol=1e-13, rtol=0)
    assert np.allclose(mittag_leffler_three(0.7, 1, 1, z), mittag_leffler(0.7, z), atol=0, rtol=0)
    assert np.allclose(mittag_leffler_three(1, 1, 0.7, z), kummer_1f1(0.7, 1, z), atol=0, rtol=0)


def test_prabhakar_general_series():
    # E_{a,b,1} is the two-parameter function; E_{1,2,1}(z) = (e^z - 1)/z
    z = np.array([0.5, -3.0 + 1j, 2j])
    assert np.allclose(mittag_leffler_three(1, 2, 1, z), (np.exp(z) - 1) / z, atol=1e-13)
    # E_{a,b,c} with c=2: sum (k+1) z^k / Gamma(a k + b), checked term by term
    a, b = 0.6, 1.3
    zz = 0.8 - 0.4j
    ref = sum((k + 1) * zz ** k / math.gamma(a * k + b) for k in range(80))
    assert abs(mittag_leffler_three(a, b, 2, zz) - ref) < 1e-13
    with pytest.raises(ConvergenceError):
        mittag_leffler_three(0.6, 1.3, 2, 500.0)


def test_lambert():
    assert lambert_w0(0.0) == 0.0
    assert abs(lambert_w0(math.e) - 1.0) < 1e-15
    w = lambert_w0(10.0)
    assert abs(w * math.exp(w) - 10.0) < 1e-12 * 10
    with pytest.raises(ValueError):
        lambert_w0(-0.5)


@given(st.floats(-1 / math.e, 1e6))
def test_lambert_residual(x):
    w = lambert_w0(x)
    assert w >= -1 - 1e-7
    assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x))


def test_reciprocal_gamma():
    assert reciprocal_gamma(1.0) == 1.0
    assert reciprocal_gamma(0.0) == 0.0
    assert reciprocal_gamma(-3.0) == 0.0
    assert abs(reciprocal_gamma(0.5) - 1 / math.sqrt(math.pi)) < 1e-16


def test_gauss_legendre_basics():
    x, w = gauss_legendre(1, -1, 1)
    assert x[0] == 0 and w[0] == 2
    for n in (2, 7, 50):
        assert abs(gauss_legendre(n, -1, 1)[1].sum() - 2) < 1e-13
    with pytest.raises(ValueError):
        gauss_legendre(0, 0, 1)
    with pytest.raises(ValueError):
        gauss_legendre(3, 1, 1)


@given(st.integers(1, 30), st.floats(-5, 5), st.floats(0.1, 5), st.integers(0, 2**31))
def test_gauss_legendre_polynomial_exactness(n, a, width, seed):
    b = a + width
    coef = np.random.default_rng(seed).normal(size=2 * n)
    x, w = gauss_legendre(n, a, b)
    approx = w @ np.polynomial.polynomial.polyval(x, coef)
    anti = np.polynomial.polynomial.polyint(coef)
    exact = np.polynomial.polynomial.polyval(b, anti) - np.polynomial.polynomial.polyval(a, anti)
    scale = np.abs(coef).sum() * max(abs(a), abs(b), 1) ** (2 * n) * width
    assert abs(approx - exact) <= 1e-11 * scale


def test_gauss_legendre_gaussian_integrand():
    # a Gaussian wide enough to be resolved by 50 nodes on [-200, 200]
    f = lambda u: np.exp(-u * u / (2 * 25.0 ** 2))
    x, w = gauss_legendre(50, -200, 200)
    ref = integrate.quad(f, -200, 200, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    assert abs(w @ f(x) - ref) < 1e-8


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.1, 50.0),
    st.floats(-math.pi, math.pi),
    st.floats(0.05, 3.0),
    st.floats(0.2, 1.2),
)
def test_kummer_reflection(r, ang, a, b):
    z = r * np.exp(1j * ang)
    if z.real > 0:
        z = -np.conj(z)
    lhs = kummer_1f1(a, b, z)
    rhs = np.exp(z) * kummer_1f1(b - a, b, -z)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1e-300)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("x,t", [(0.2, 0.5), (1.0, 1.0), (3.0, 2.0), (10.0, 0.3), (40.0, 1.0)])
def test_laplace_consistency_real(beta, x, t):
    sl = mittag_leffler(beta, -x * t ** beta)
    drd = kummer_1f1(beta, 1.0, -x * t)
    assert abs(sl - cf_by_inversion("sl", beta, x, t)) < 1e-6
    assert abs(drd - cf_by_inversion("drd", beta, x, t)) < 1e-6


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9, 0.99]), st.floats(0.05, 40.0), st.floats(math.pi / 2, math.pi), st.booleans())
def test_ml_against_series_reference(beta, r, ang, flip):
    # the region used by pricing: Re(z) <= 0
    z = r ** beta * np.exp(1j * (-ang if flip else ang))
    assert abs(mittag_leffler(beta, z) - ml_reference(beta, z)) <= TOL


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 200.0), st.floats(math.pi / 2, math.pi), st.booleans())
def test_kummer_against_mpmath(a, r, ang, flip):
    z = r * np.exp(1j * (-ang if flip else ang))
    assert abs(kummer_1f1(a, 1.0, z) - hyp1f1_reference(a, 1.0, z)) <= TOL


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8, 0.95])
@pytest.mark.parametrize("ang", [0.6 * math.pi, 0.8 * math.pi, math.pi])
def test_regime_switch_continuity(beta, ang):
    pol = DEFAULT_POLICY
    R = pol.ml_radius(beta)
    ray = np.exp(1j * ang)
    below = mittag_leffler(beta, R * (1 - 1e-9) * ray, pol)
    above = mittag_leffler(beta, R * (1 + 1e-9) * ray, pol)
    assert abs(below - above) <= 10 * pol.abs_tol
    Rk = pol.kummer_radius()
    below = kummer_1f1(beta, 1.0, Rk * (1 - 1e-9) * ray, pol)
    above = kummer_1f1(beta, 1.0, Rk * (1 + 1e-9) * ray, pol)
    assert abs(below - above) <= 10 * pol.abs_tol


def test_fixed_series_radius_is_honoured():
    pol = EvalPolicy(series_radius=5.0)
    assert pol.ml_radius(0.3) == 5.0 and pol.kummer_radius() == 5.0
    # near beta = 1 a radius of 5 already makes the expansion accurate enough to agree loosely
    z = -6.0
    assert abs(mittag_leffler(0.9, z, pol) - ml_reference(0.9, z)) < 1e-2


def test_policy_validation():
    for kw in ({"series_radius": 0.0}, {"abs_tol": 0.0}, {"asymptotic_terms": 0}, {"max_terms": 10}):
        with pytest.raises(ValueError):
            EvalPolicy(**kw)


def test_series_budget_exhaustion():
    with pytest.raises(ConvergenceError):
        mittag_leffler(0.5, -30.0, EvalPolicy(series_radius=1e3, max_terms=200, asymptotic_terms=10))


def test_arrays_broadcast():
    z = np.linspace(-30, 2, 12).reshape(3, 4) + 0.5j
    out = mittag_leffler(0.6, z)
    assert out.shape == (3, 4)
    assert np.allclose(out.ravel(), [mittag_leffler(0.6, v) for v in z.ravel()], rtol=0, atol=1e-15)
