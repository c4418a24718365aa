import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special, stats

from stablesub.errors import (DegenerateError, DomainError, UnsupportedParameterError)
from stablesub.stable import (DiscreteSpectralMeasure, StableCdf, StableLevyDensityParams,
                              StableParams, char_exponent, density, fast_density, levy_density,
                              project, sample, sample_multivariate)
from stablesub.calibration import ks_test

alphas = st.floats(0.3, 2.0).filter(lambda a: abs(a - 1.0) > 1e-3)
betas = st.floats(-1.0, 1.0)


# inverse Fourier transform of exp(char_exponent) evaluated with mpmath at 30 digits
INVERSE_FT = [
    (1.62, 0.09, 0.0, 0.28454067874626411),
    (1.62, 0.09, 1.5, 0.13670126510080763),
    (1.62, 0.09, -3.0, 0.031193971004927337),
    (1.3, 0.5, 0.5, 0.13291095667289057),
    (0.8, 0.5, 2.0, 0.21130962274798541),
    (1.9, -0.3, -1.0, 0.21147401592135893),
    (0.8, 0.0, 0.3, 0.29959382344790715),
    (1.5, 1.0, -1.0, 0.27685986885674678),
]


def test_char_exponent_at_zero():
    assert char_exponent(StableParams(1.3, 0.4, 2.0, 1.0), 0.0) == 0j


def test_char_exponent_gaussian_kills_skew():
    assert char_exponent(StableParams(2.0, 0.7), 1.0) == pytest.approx(-1.0 + 0j, abs=1e-15)


def test_char_exponent_alpha_one():
    val = char_exponent(StableParams(1.0, 1.0), math.e)
    assert val == pytest.approx(-math.e * (1 + 2j / math.pi), rel=1e-14)


@given(alphas | st.just(1.0), betas, st.floats(0.0, 5.0), st.floats(-5, 5), st.floats(-50, 50))
def test_char_exponent_properties(a, b, s, m, u):
    p = StableParams(a, b, s, m)
    v = char_exponent(p, u)
    assert v.real <= 0.0
    assert char_exponent(p, -u) == pytest.approx(np.conj(v), abs=1e-12)


@pytest.mark.parametrize("a,b,x,expected", INVERSE_FT)
def test_density_matches_inverse_fourier(a, b, x, expected):
    assert density(StableParams(a, b), x) == pytest.approx(expected, rel=1e-10)


def test_density_at_zero_closed_form():
    assert density(StableParams(1.5), 0.0) == pytest.approx(special.gamma(1 + 1 / 1.5) / math.pi, rel=1e-12)
    assert density(StableParams(1.5), 0.0) == pytest.approx(0.287353, abs=1e-6)


def test_density_matches_scipy_levy_stable():
    x = np.array([-2.0, 0.3, 4.0])
    ours = density(StableParams(1.4, 0.3, 1.5, 0.2), x)
    ref = stats.levy_stable.pdf(x, 1.4, 0.3, loc=0.2, scale=1.5)
    np.testing.assert_allclose(ours, ref, rtol=1e-5)


def test_density_near_gaussian_limit():
    assert density(StableParams(1.999), 1.0) == pytest.approx(stats.norm.pdf(1.0, scale=math.sqrt(2)), abs=1e-3)


def test_density_gaussian_exact():
    assert density(StableParams(2.0, 0.0, 1.0), 0.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), abs=1e-15)


def test_density_reflection_grid():
    x = np.linspace(-6, 6, 49)
    f = density(StableParams(1.5, 0.4), x)
    g = density(StableParams(1.5, -0.4), -x)
    np.testing.assert_allclose(f, g, atol=1e-9)


@pytest.mark.parametrize("a,b", [(1.2, 0.0), (1.5, 0.5), (1.8, -0.9), (2.0, 0.0)])
def test_density_mass(a, b):
    t = np.linspace(-np.arcsinh(1e5), np.arcsinh(1e5), 8001)
    x = np.sinh(t)
    mass = np.trapezoid(fast_density(StableParams(a, b), x) * np.cosh(t), t)
    assert 0.999 <= mass <= 1.0 + 1e-6


@given(st.floats(0.5, 1.95).filter(lambda a: abs(a - 1) > 0.05), st.floats(-1, 1),
       st.floats(-30, 30))
def test_fast_density_agrees_with_quadrature(a, b, x):
    p = StableParams(a, b)
    f, g = density(p, x), fast_density(p, x)
    assert abs(f - g) <= 1e-6 * f + 1e-12


def test_density_rejects_alpha_one_and_zero_scale():
    with pytest.raises(UnsupportedParameterError):
        density(StableParams(1.0), 0.5)
    with pytest.raises(DegenerateError):
        density(StableParams(1.5, 0.0, 0.0), 0.5)


@pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=2.1), dict(alpha=1.5, beta=1.2),
                                dict(alpha=1.5, sigma=-1.0), dict(alpha=1.5, mu=math.inf)])
def test_params_validation(kw):
    with pytest.raises(DomainError):
        StableParams(**kw)


def test_sample_empty(rng):
    assert sample(StableParams(1.5), 0, rng).shape == (0,)


def test_sampler_ks_against_integrated_density(rng):
    p = StableParams(1.62, 0.09)
    res = ks_test(sample(p, 100_000, rng), StableCdf(p))
    assert res.p_value > 0.01


def test_cdf_matches_scipy():
    p = StableParams(1.7, -0.4, 2.0, 1.0)
    x = np.array([-10.0, -1.0, 1.0, 3.0, 25.0])
    np.testing.assert_allclose(StableCdf(p)(x), stats.levy_stable.cdf(x, 1.7, -0.4, loc=1.0, scale=2.0),
                               atol=2e-5)


def test_gaussian_sampler_variance(rng):
    x = sample(StableParams(2.0, 0.0, 1.0), 200_000, rng)
    assert np.var(x) == pytest.approx(2.0, rel=0.02)


@pytest.mark.parametrize("a", [0.5, 3.0])
def test_scaling_law(rng, a):
    p = StableParams(1.5, 0.3, 1.2, 0.4)
    s = sample(p, 40_000, rng)
    lhs = a ** (1 / p.alpha) * (s - p.mu) + a * p.mu
    rhs = sample(StableParams(p.alpha, p.beta, p.sigma * a ** (1 / p.alpha), p.mu * a), 40_000, rng)
    assert stats.ks_2samp(lhs, rhs).pvalue > 0.01


def test_levy_density_examples():
    q = StableLevyDensityParams(1.0, 0.0, 1.0)
    assert levy_density(q, 2.0) == 0.25
    assert levy_density(q, -2.0) == 0.0
    sym = StableLevyDensityParams(0.7, 0.7, 1.4)
    x = np.linspace(0.1, 5, 9)
    np.testing.assert_array_equal(levy_density(sym, x), levy_density(sym, -x))
    with pytest.raises(DomainError):
        levy_density(q, 0.0)
    with pytest.raises(DomainError):
        StableLevyDensityParams(0.0, 0.0, 1.0)


def test_spectral_measure_validation():
    with pytest.raises(DomainError):
        DiscreteSpectralMeasure(1.5, [1.0], [[1.0, 1.0]])
    with pytest.raises(DomainError):
        DiscreteSpectralMeasure(1.5, [-1.0], [[1.0, 0.0]])
    m = DiscreteSpectralMeasure(1.5, [2.0], [[0.6, 0.8]])
    assert m.dim == 2
    with pytest.raises(ValueError):
        m.weights[0] = 3.0


def test_project_one_dimensional_reduction():
    a, b, alpha = 2.0, 0.5, 1.3
    p = project(DiscreteSpectralMeasure(alpha, [a, b], [[1.0], [-1.0]]), np.array([1.0]))
    assert p.sigma == pytest.approx((a + b) ** (1 / alpha), rel=1e-14)
    assert p.beta == pytest.approx((a - b) / (a + b), rel=1e-14)


def test_project_orthogonal_direction():
    p = project(DiscreteSpectralMeasure(1.5, [1.0], [[1.0, 0.0]]), np.array([0.0, 2.0]))
    assert p.sigma == 0.0 and p.beta == 0.0


def test_project_brute_force(rng):
    w = np.array([0.7, 1.9])
    ang = rng.uniform(0, 2 * np.pi, 2)
    s = np.column_stack([np.cos(ang), np.sin(ang)])
    u = rng.normal(size=2)
    p = project(DiscreteSpectralMeasure(1.5, w, s, shift=[0.3, -0.2]), u)
    s2 = 0.0
    sb = 0.0
    for j in range(2):
        d = u[0] * s[j, 0] + u[1] * s[j, 1]
        s2 += w[j] * abs(d) ** 1.5
        sb += w[j] * abs(d) ** 1.5 * (1 if d > 0 else -1)
    assert p.sigma == pytest.approx(s2 ** (1 / 1.5), rel=1e-13)
    assert p.beta == pytest.approx(sb / s2, rel=1e-13)
    assert p.mu == pytest.approx(0.3 * u[0] - 0.2 * u[1], rel=1e-13)


def test_project_alpha_one_drift():
    m = DiscreteSpectralMeasure(1.0, [2.0], [[1.0]], shift=[0.0])
    p = project(m, np.array([3.0]))
    assert p.mu == pytest.approx(-2 / math.pi * 2.0 * 3.0 * math.log(3.0), rel=1e-14)


def test_multivariate_no_atoms_is_shift(rng):
    m = DiscreteSpectralMeasure(1.5, [], np.zeros((0, 2)), shift=[1.0, -2.0])
    np.testing.assert_array_equal(sample_multivariate(m, rng), [1.0, -2.0])


def test_multivariate_univariate_reduction(rng):
    lam, alpha = 2.5, 1.7
    m = DiscreteSpectralMeasure(alpha, [lam], [[1.0]])
    x = sample_multivariate(m, rng, 40_000)[:, 0]
    y = sample(StableParams(alpha, 1.0, lam ** (1 / alpha)), 40_000, rng)
    assert stats.ks_2samp(x, y).pvalue > 0.01


def test_multivariate_projection_cf(rng):
    m = DiscreteSpectralMeasure(1.6, [1.0, 0.5], [[1.0, 0.0], [0.6, 0.8]], shift=[0.2, 0.1])
    x = sample_multivariate(m, rng, 100_000)
    for u in ([0.5, 0.5], [-1.0, 0.3], [0.2, -0.9]):
        u = np.array(u)
        proj = x @ u
        emp = np.mean(np.exp(1j * proj))
        se = math.sqrt((np.var(np.cos(proj)) + np.var(np.sin(proj))) / len(proj))
        th = np.exp(char_exponent(project(m, u), 1.0))
        assert abs(emp - th) < 3 * se + 1e-12


def test_multivariate_alpha_one_unsupported(rng):
    with pytest.raises(UnsupportedParameterError):
        sample_multivariate(DiscreteSpectralMeasure(1.0, [1.0], [[1.0]]), rng)
