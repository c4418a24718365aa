import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from stablesub.calibration import ks_test, lognormal_cdf
from stablesub.errors import DomainError
from stablesub.subordinator import (JumpPath, LogNormalCppParams, inverse_tail_integral,
                                    laplace_exponent, sample_path, tail_integral,
                                    tail_integral_derivative)

params = st.builds(LogNormalCppParams, st.floats(0.1, 20), st.floats(-3, 10), st.floats(0.1, 2))


def test_tail_integral_examples():
    p = LogNormalCppParams(5.0, 0.0, 1.0)
    assert tail_integral(p, 1.0) == pytest.approx(2.5, abs=1e-15)
    assert tail_integral(p, 0.0) == 5.0
    q = LogNormalCppParams(5.22, 8.82, 0.73)
    # 1 - Phi(1) from the error function
    surv = 0.5 * math.erfc(1 / math.sqrt(2))
    assert tail_integral(q, math.exp(8.82 + 0.73)) == pytest.approx(5.22 * surv, rel=1e-12)
    assert tail_integral(q, math.exp(8.82 + 0.73)) == pytest.approx(0.8281, abs=1e-4)


def test_tail_integral_erf_form():
    p = LogNormalCppParams(5.22, 8.82, 0.73)
    x = np.array([800.0, 6000.0, 40000.0])
    erf = special.erf((np.log(x) - 8.82) / (math.sqrt(2) * 0.73))
    np.testing.assert_allclose(tail_integral(p, x), 0.5 * 5.22 * (1 - erf), rtol=1e-12)


def test_inverse_examples():
    p = LogNormalCppParams(5.0, 0.0, 1.0)
    assert inverse_tail_integral(p, 2.5) == pytest.approx(1.0, rel=1e-14)
    assert inverse_tail_integral(p, 6.0) == 0.0
    assert inverse_tail_integral(p, 5.0) == 0.0
    q = LogNormalCppParams(7.8, 8.01, 0.91)
    assert tail_integral(q, inverse_tail_integral(q, 1.3)) == pytest.approx(1.3, abs=1e-9)
    with pytest.raises(DomainError):
        inverse_tail_integral(p, 0.0)


@given(params, st.floats(0.0, 1.0))
def test_inverse_is_generalized_inverse(p, frac):
    y = max(frac * p.lam * 1.2, 1e-12)
    x = inverse_tail_integral(p, y)
    assert tail_integral(p, x) <= y
    if x > 0:
        grid = x * (1.0 - np.logspace(-9, -0.01, 30))
        assert np.all(tail_integral(p, grid) > y)


@given(params)
def test_tail_integral_monotone(p):
    x = np.concatenate([[0.0], np.exp(np.linspace(p.mu_ln - 8 * p.sigma_ln, p.mu_ln + 8 * p.sigma_ln, 200))])
    u = tail_integral(p, x)
    assert u[0] == p.lam
    assert np.all(np.diff(u) <= 0)
    assert u[-1] < 1e-12 * p.lam


def test_tail_derivative_finite_difference():
    p = LogNormalCppParams(3.0, 1.0, 0.6)
    x, h = 2.7, 1e-5
    fd = (tail_integral(p, x + h) - tail_integral(p, x - h)) / (2 * h)
    assert tail_integral_derivative(p, x) == pytest.approx(fd, rel=1e-7)


def test_laplace_exponent_zero_and_domain():
    p = LogNormalCppParams(1.0, 0.0, 0.5)
    assert laplace_exponent(p, 0) == 0
    with pytest.raises(DomainError):
        laplace_exponent(p, 0.5)


def test_laplace_exponent_monte_carlo(rng):
    p = LogNormalCppParams(1.0, 0.0, 0.5)
    x = np.exp(0.5 * rng.standard_normal(10_000_000))
    v = np.exp(-x) - 1.0
    est, se = v.mean(), v.std() / math.sqrt(len(v))
    assert abs(laplace_exponent(p, -1.0).real - est) < 3 * se


def test_laplace_exponent_decreases_to_minus_lambda():
    p = LogNormalCppParams(2.0, 0.0, 0.5)
    vals = [laplace_exponent(p, z).real for z in (-0.1, -1.0, -10.0, -100.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > -2.0
    assert laplace_exponent(p, -1e4).real == pytest.approx(-2.0, abs=1e-3)


@given(st.floats(-5, 0), st.floats(-20, 20))
def test_laplace_exponent_conjugate(re, im):
    p = LogNormalCppParams(1.5, 0.2, 0.7)
    z = complex(re, im)
    assert laplace_exponent(p, z.conjugate()) == pytest.approx(np.conj(laplace_exponent(p, z)), abs=1e-9)


def test_laplace_exponent_against_gauss_hermite():
    p = LogNormalCppParams(2.0, 0.3, 0.4)
    x, w = np.polynomial.hermite_e.hermegauss(80)
    z = complex(-0.7, 2.0)
    ref = 2.0 * (np.sum(w * np.exp(z * np.exp(0.3 + 0.4 * x))) / math.sqrt(2 * math.pi) - 1)
    assert laplace_exponent(p, z) == pytest.approx(ref, abs=1e-9)


def test_sample_path_counts(rng):
    p = LogNormalCppParams(5.0, 0.0, 1.0)
    counts = [len(sample_path(p, 100.0, rng).times) for _ in range(200)]
    assert abs(np.mean(counts) - 500) < 3 * math.sqrt(500 / 200)


def test_sample_path_tiny_horizon_and_sizes(rng):
    p = LogNormalCppParams(5.0, 1.0, 0.5)
    assert len(sample_path(p, 1e-9, rng).times) == 0
    path = sample_path(p, 400.0, rng)
    assert len(path.sizes) >= 1000
    assert ks_test(path.sizes, lognormal_cdf(1.0, 0.5)).p_value > 0.01
    assert path.value(400.0) == pytest.approx(path.sizes.sum())


def test_jump_path_validation():
    with pytest.raises(DomainError):
        JumpPath(1.0, [0.5, 0.2], [1.0, 1.0])
    with pytest.raises(DomainError):
        JumpPath(1.0, [0.5], [-1.0])
    with pytest.raises(DomainError):
        LogNormalCppParams(0.0, 0.0, 1.0)
