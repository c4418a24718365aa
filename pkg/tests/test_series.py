import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from stablesub.errors import ConfigError, NumericalFailure
from stablesub.levy_copula import ClaytonParams, joint_jump_density, axis_tail
from stablesub.series import (ModelSpec, SimConfig, Trajectory, empirical_cf, empirical_cf_values,
                              min_truncation, simulate, simulate_bars, simulate_segments,
                              subordinator_exponent, theoretical_cf, trajectories_from_csv,
                              trajectories_to_csv)
from stablesub.stable import StableParams, char_exponent
from stablesub.subordinator import LogNormalCppParams, laplace_exponent, tail_integral_derivative


def with_delta(model, d):
    return ModelSpec(model.stable1, model.stable2, model.sub1, model.sub2, ClaytonParams(d))


def test_min_truncation_rule(unit_model):
    assert min_truncation(unit_model) == math.ceil(5 + 6 * math.sqrt(5) + 20)
    with pytest.raises(ConfigError):
        SimConfig(n_paths=3, seed=1, truncation_n=10).resolved(unit_model)


@pytest.mark.parametrize("kw", [dict(n_paths=0, seed=1), dict(n_paths=2, seed=1, s_max=1.5),
                                dict(n_paths=2, seed=1, eval_grid=(0.5, 0.2)),
                                dict(n_paths=2, seed=1, s_max=0.5, eval_grid=(0.7,))])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_model_rejects_alpha_one(unit_model):
    with pytest.raises(ConfigError):
        ModelSpec(StableParams(1.0), unit_model.stable2, unit_model.sub1, unit_model.sub2, unit_model.copula)


def test_model_dict_round_trip(apple_msft):
    assert ModelSpec.from_dict(apple_msft.to_dict()) == apple_msft
    with pytest.raises(ConfigError):
        ModelSpec.from_dict({"stable1": {}})


def test_zero_at_time_zero_and_grid(unit_model):
    paths = simulate(unit_model, SimConfig(n_paths=50, seed=3, eval_grid=(0.0, 0.5, 1.0)))
    assert len(paths) == 50
    for p in paths:
        assert p.at(0.0) == (0.0, 0.0)
        with pytest.raises(ValueError):
            p.at(0.3)


def test_vanishing_intensity_gives_zero_paths():
    m = ModelSpec(StableParams(1.5), StableParams(1.7), LogNormalCppParams(1e-8, 0.0, 1.0),
                  LogNormalCppParams(1e-8, 0.0, 1.0), ClaytonParams(1.0))
    paths = simulate(m, SimConfig(n_paths=200, seed=5))
    assert all(p.z1[-1] == 0.0 and p.z2[-1] == 0.0 for p in paths)


def test_determinism_and_chunk_independence(unit_model):
    a1, a2 = simulate_segments(unit_model, 30, 2, [0.5, 1.0], seed=11)
    b1, b2 = simulate_segments(unit_model, 30, 2, [0.5, 1.0], seed=11)
    assert np.array_equal(a1, b1) and np.array_equal(a2, b2)
    c1, c2 = simulate_segments(unit_model, 10, 2, [0.5, 1.0], seed=11, first_path=20)
    assert np.array_equal(a1[20:], c1) and np.array_equal(a2[20:], c2)
    d1, _ = simulate_segments(unit_model, 30, 2, [0.5, 1.0], seed=12)
    assert not np.array_equal(a1, d1)


def test_bars_are_segment_increments(unit_model):
    d1, d2 = simulate_bars(unit_model, 4, 6, seed=2, bar_duration=0.5)
    z1, z2 = simulate_segments(unit_model, 4, 3, [0.5, 1.0], seed=2)
    np.testing.assert_allclose(d1, np.diff(z1, axis=2, prepend=0).reshape(4, -1), atol=0)
    with pytest.raises(ConfigError):
        simulate_bars(unit_model, 4, 6, seed=2, bar_duration=0.3)


def test_piecewise_constant_paths(unit_model):
    grid = np.linspace(0, 1, 201)
    z1, _ = simulate_segments(unit_model, 5, 1, grid, seed=4)
    jumps = np.count_nonzero(np.diff(z1[:, 0, :], axis=1), axis=1)
    assert np.all(jumps <= 60)


def test_term_counts_poisson(unit_model):
    _, _, c1, c2 = simulate_segments(unit_model, 1000, 1, [0.5, 1.0], seed=8, counts=True)
    for counts, lam in ((c2[:, 0, 1], 5.0), (c2[:, 0, 0], 2.5), (c1[:, 0, 1], 3.0)):
        assert abs(counts.mean() - lam) < 3 * math.sqrt(lam / len(counts))
        assert counts.var(ddof=1) == pytest.approx(lam, rel=0.2)


def test_truncated_series_misses_component_one_terms():
    m = ModelSpec(StableParams(1.5), StableParams(1.5), LogNormalCppParams(5.0, 0.0, 0.5),
                  LogNormalCppParams(5.0, 0.0, 0.5), ClaytonParams(0.8))
    _, _, exact, _ = simulate_segments(m, 2000, 1, [1.0], seed=9, counts=True)
    _, _, trunc, _ = simulate_segments(m, 2000, 1, [1.0], seed=9, counts=True, exact_remainder=False)
    assert abs(exact.mean() - 5.0) < 3 * math.sqrt(5.0 / 2000)
    assert trunc.mean() < exact.mean() - 0.3


def test_marginal_invariant_to_delta(unit_model):
    _, a = simulate_segments(with_delta(unit_model, 0.5), 5000, 1, [1.0], seed=21)
    _, b = simulate_segments(with_delta(unit_model, 5.0), 5000, 1, [1.0], seed=22)
    assert stats.ks_2samp(a.ravel(), b.ravel()).pvalue > 0.01


def test_component_one_marginal_cf(unit_model):
    z1, _ = simulate_segments(unit_model, 20_000, 1, [1.0], seed=23)
    for u in (-0.8, 0.4, 1.5):
        est = empirical_cf_values(z1[:, 0, 0], np.zeros(len(z1)), (u, 0.0))
        th = np.exp(laplace_exponent(unit_model.sub1, char_exponent(unit_model.stable1, u)))
        assert abs(est.value - th) < 3 * est.se


def test_theoretical_cf_trivial(unit_model):
    assert theoretical_cf(unit_model, (0.0, 0.0), 0.7) == 1.0
    with pytest.raises(ValueError):
        theoretical_cf(unit_model, (1.0, 1.0), 0.0)


@settings(max_examples=25)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 1.0), st.floats(0.2, 20))
def test_theoretical_cf_modulus_and_symmetry(u1, u2, s, d):
    m = ModelSpec(StableParams(1.5, 0.3, 1.0, 0.2), StableParams(1.8, -0.2, 0.5, -0.1),
                  LogNormalCppParams(3.0, 0.0, 0.5), LogNormalCppParams(5.0, -0.5, 0.4),
                  ClaytonParams(d))
    v = theoretical_cf(m, (u1, u2), s)
    assert abs(v) <= 1 + 1e-12
    assert theoretical_cf(m, (-u1, -u2), s) == pytest.approx(np.conj(v), abs=1e-10)


def test_comonotone_limit():
    sub = LogNormalCppParams(4.0, 0.0, 0.6)
    m = ModelSpec(StableParams(1.5, 0.2, 1.0, 0.1), StableParams(1.7, -0.1, 0.8, 0.0), sub, sub,
                  ClaytonParams(1e3))
    for w in (0.3, 1.0):
        one_d = np.exp(0.6 * laplace_exponent(sub, char_exponent(m.stable1, w) + char_exponent(m.stable2, w)))
        assert abs(theoretical_cf(m, (w, w), 0.6) - one_d) < 1e-3


def test_exponent_against_direct_quadrature(unit_model):
    # psi_T from joint_jump_density on an (x, y) tensor grid plus the two axis measures
    m = unit_model
    z1, z2 = complex(-0.4, 0.9), complex(-0.2, -0.5)
    t, w = np.polynomial.legendre.leggauss(400)
    lx = m.sub1.mu_ln + m.sub1.sigma_ln * 9 * t
    ly = m.sub2.mu_ln + m.sub2.sigma_ln * 9 * t
    X, Y = np.meshgrid(np.exp(lx), np.exp(ly), indexing="ij")
    dens = joint_jump_density(m.copula, m.sub1, m.sub2, X, Y) * X * Y
    common = (m.sub1.sigma_ln * 9) * (m.sub2.sigma_ln * 9) * np.einsum(
        "i,j,ij->", w, w, dens * (np.exp(z1 * X + z2 * Y) - 1))
    axis = 0j
    for p, other, z, lg in ((m.sub1, m.sub2, z1, lx), (m.sub2, m.sub1, z2, ly)):
        x = np.exp(lg)
        h = 1e-6
        # axis-measure density: -d/dx [U(x) - F(U(x), lam_other)]
        dv = -(axis_tail(m.copula, p, other, x * (1 + h)) - axis_tail(m.copula, p, other, x * (1 - h))) / (2 * h)
        axis += p.sigma_ln * 9 * np.sum(w * dv * (np.exp(z * x) - 1))
    assert subordinator_exponent(m, z1, z2) == pytest.approx(common + axis, abs=1e-6)


def test_exponent_failure_is_reported(unit_model, monkeypatch):
    import stablesub.series as series
    monkeypatch.setattr(series, "_common_part", lambda *a: complex(np.random.default_rng().random()))
    with pytest.raises(NumericalFailure) as info:
        subordinator_exponent(unit_model, -1.0 + 0j, -1.0 + 0j)
    assert "levels" in info.value.diagnostics


def test_empirical_vs_theoretical_small(unit_model):
    z1, z2 = simulate_segments(unit_model, 20_000, 1, [0.25, 1.0], seed=31)
    for j, s in enumerate((0.25, 1.0)):
        for u in ((0.5, -0.5), (1.0, 1.0), (-1.5, 0.3)):
            est = empirical_cf_values(z1[:, 0, j], z2[:, 0, j], u)
            assert abs(est.value - theoretical_cf(unit_model, u, s)) < 3.5 * est.se


def test_negative_control_detects_wrong_delta(unit_model):
    sim = with_delta(unit_model, 0.2)
    z1, z2 = simulate_segments(sim, 20_000, 1, [1.0], seed=32)
    est = empirical_cf_values(z1[:, 0, 0], z2[:, 0, 0], (1.0, 1.0))
    th = theoretical_cf(with_delta(unit_model, 20.0), (1.0, 1.0), 1.0)
    assert abs(est.value - th) > 3 * est.se


def test_empirical_cf_edge_cases(unit_model):
    paths = simulate(unit_model, SimConfig(n_paths=20, seed=1))
    est = empirical_cf(paths, (0.0, 0.0), 1.0)
    assert est.value == 1.0 and est.se == 0.0
    zero = [Trajectory(np.array([1.0]), np.zeros(1), np.zeros(1))] * 3
    assert empirical_cf(zero, (2.0, 3.0), 1.0).value == 1.0
    with pytest.raises(ValueError):
        empirical_cf([], (1.0, 1.0), 1.0)


def test_csv_export_round_trip(unit_model):
    paths = simulate(unit_model, SimConfig(n_paths=3, seed=2, eval_grid=(0.0, 0.5, 1.0)))
    back = trajectories_from_csv(trajectories_to_csv(paths))
    for a, b in zip(paths, back):
        assert np.array_equal(a.times, b.times) and np.array_equal(a.z1, b.z1) and np.array_equal(a.z2, b.z2)
    assert paths[0].to_csv().splitlines()[0] == "time,z1,z2"
