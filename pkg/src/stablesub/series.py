"""Series-representation simulator for the bivariate subordinated stable model.

Model: ``X(s) = (S_1(T_1(s)), S_2(T_2(s)))`` with independent stable S_k and a
compound-Poisson subordinator (T_1, T_2) with log-normal jumps coupled by a
Clayton Levy copula.  On ``s in [0, 1]``

    Z_k(s) = sum_i [G_i^k tau_ik^(1/alpha_k) + mu_k tau_ik] 1{R_i <= s},
    tau_i1 = U_1^(-1)(Q_i Gamma_i),   tau_i2 = U_2^(-1)(Gamma_i),

with Poisson epochs Gamma_i, uniform R_i, G_i^k ~ S_alpha_k(sigma_k, beta_k, 0)
and Q_i ~ H (the Clayton conditional law).

Terms with Gamma_i >= lam_2 leave Z_2 untouched but still feed Z_1 whenever
Q_i Gamma_i < lam_1.  After the first ``truncation_n`` terms the remainder
of the series is drawn exactly (see ``_remainder``) unless
``exact_remainder=False``.

Randomness: one stream per path, ``SeedSequence(seed, spawn_key=(path,))``;
results do not depend on chunking or ordering.
"""

from dataclasses import dataclass, field
from typing import NamedTuple
import math

import numpy as np
from scipy import special

from .errors import ConfigError, NumericalFailure
from .levy_copula import (ClaytonParams, common_intensity, conditional_cdf,
                          conditional_quantile)
from .stable import StableParams, char_exponent, cms_transform
from .subordinator import LogNormalCppParams, inverse_tail_integral

# uniforms per series term: epoch gap, R, Q, G1 (2), G2 (2)
_U_PER_TERM = 7
_CHUNK_VALUES = 4_000_000


@dataclass(frozen=True)
class ModelSpec:
    stable1: StableParams
    stable2: StableParams
    sub1: LogNormalCppParams
    sub2: LogNormalCppParams
    copula: ClaytonParams

    def __post_init__(self):
        for st in (self.stable1, self.stable2):
            if st.alpha == 1.0:
                raise ConfigError("simulation needs stable alpha != 1")

    @property
    def max_lam(self):
        return max(self.sub1.lam, self.sub2.lam)

    def to_dict(self):
        return {
            "stable1": _fields(self.stable1), "stable2": _fields(self.stable2),
            "sub1": _fields(self.sub1), "sub2": _fields(self.sub2),
            "copula": _fields(self.copula),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(StableParams(**d["stable1"]), StableParams(**d["stable2"]),
                       LogNormalCppParams(**d["sub1"]), LogNormalCppParams(**d["sub2"]),
                       ClaytonParams(**d["copula"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad model config: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _fields(obj):
    return {k: float(v) for k, v in obj.__dict__.items()}


def min_truncation(model):
    m = model.max_lam
    return int(math.ceil(m + 6.0 * math.sqrt(m) + 20.0))


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    seed: int
    truncation_n: int = None
    s_max: float = 1.0
    eval_grid: tuple = None
    exact_remainder: bool = True

    def __post_init__(self):
        if not (isinstance(self.n_paths, (int, np.integer)) and self.n_paths >= 1):
            raise ConfigError(f"n_paths must be a positive integer, got {self.n_paths}")
        if not 0.0 < self.s_max <= 1.0:
            raise ConfigError("s_max must lie in (0, 1]")
        grid = (self.s_max,) if self.eval_grid is None else tuple(float(g) for g in self.eval_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("eval_grid must be nonempty and strictly increasing")
        if grid[0] < 0.0 or grid[-1] > self.s_max:
            raise ConfigError("eval_grid must lie in [0, s_max]")
        object.__setattr__(self, "eval_grid", grid)

    def resolved(self, model):
        """Copy with truncation_n filled in and checked against the model."""
        need = min_truncation(model)
        n = need if self.truncation_n is None else self.truncation_n
        if n < need:
            raise ConfigError(f"truncation_n={n} below required {need} "
                              f"(max lam + 6 sqrt(max lam) + 20)")
        return SimConfig(self.n_paths, self.seed, n, self.s_max, self.eval_grid,
                         self.exact_remainder)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    def at(self, s):
        idx = np.flatnonzero(np.isclose(self.times, s, rtol=0, atol=1e-12))
        if not len(idx):
            raise ValueError(f"s={s} is not on the evaluation grid")
        return self.z1[idx[0]], self.z2[idx[0]]

    def to_csv(self):
        """CSV text with columns time, z1, z2."""
        rows = ["time,z1,z2"]
        rows += [f"{t!r},{a!r},{b!r}" for t, a, b in zip(map(float, self.times),
                                                          map(float, self.z1), map(float, self.z2))]
        return "\n".join(rows) + "\n"


def trajectories_to_csv(paths):
    """Long-format CSV with columns path_id, time, z1, z2."""
    rows = ["path_id,time,z1,z2"]
    for k, p in enumerate(paths):
        rows += [f"{k},{t!r},{a!r},{b!r}" for t, a, b in zip(map(float, p.times),
                                                              map(float, p.z1), map(float, p.z2))]
    return "\n".join(rows) + "\n"


def trajectories_from_csv(text):
    """Inverse of ``trajectories_to_csv``."""
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != "path_id,time,z1,z2":
        raise ValueError("expected header path_id,time,z1,z2")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, 4)
    out = []
    for k in np.unique(data[:, 0]).astype(int):
        d = data[data[:, 0] == k]
        out.append(Trajectory(d[:, 1], d[:, 2], d[:, 3]))
    return out


def _path_streams(seed, path):
    ss = np.random.SeedSequence(seed, spawn_key=(path,))
    main, tail, extra = ss.spawn(3)
    return (np.random.Generator(np.random.PCG64(main)),
            np.random.Generator(np.random.PCG64(tail)),
            np.random.Generator(np.random.PCG64(extra)))


def _increments(model, tau1, tau2, g1u, g2u):
    s1, s2 = model.stable1, model.stable2
    g1 = cms_transform(s1.alpha, s1.beta, s1.sigma, 0.0, g1u[0], g1u[1])
    g2 = cms_transform(s2.alpha, s2.beta, s2.sigma, 0.0, g2u[0], g2u[1])
    inc1 = g1 * tau1 ** (1.0 / s1.alpha) + s1.mu * tau1
    inc2 = g2 * tau2 ** (1.0 / s2.alpha) + s2.mu * tau2
    return inc1, inc2


def _terms(model, gamma, u):
    """Series terms for epochs ``gamma`` and matching uniforms ``u[1:7]``."""
    q = conditional_quantile(model.copula, 1.0 - u[2])
    tau1 = inverse_tail_integral(model.sub1, q * gamma)
    tau2 = inverse_tail_integral(model.sub2, gamma)
    inc1, inc2 = _increments(model, tau1, tau2, u[3:5], u[5:7])
    return u[1], inc1, inc2, tau1, tau2


def _remainder_draws(lam1, rng, n_seg):
    counts = rng.poisson(lam1, size=n_seg)
    return counts, rng.random((5, int(counts.sum())))


def _remainder(model, gamma_last, counts, u):
    """Component-1 terms beyond the last epoch of each segment.

    Beyond epoch g >= lam_2 only component 1 can move.  Its surviving terms,
    indexed by u = Q * Gamma in (0, lam_1), form a Poisson process with
    intensity 1 - H(g / u): Poisson(lam_1) uniform candidates are thinned.
    """
    seg = np.repeat(np.arange(len(counts)), counts)
    pos = model.sub1.lam * (1.0 - u[0])
    keep = u[1] < 1.0 - conditional_cdf(model.copula, gamma_last[seg] / pos)
    tau1 = inverse_tail_integral(model.sub1, pos[keep])
    inc1, _ = _increments(model, tau1, np.zeros_like(tau1), u[3:5, keep], u[3:5, keep])
    return seg[keep], u[2, keep], inc1, tau1


def _accumulate(out, rows, r, inc, grid):
    """out[row, g] += inc where r <= grid[g]."""
    hit = r[:, None] <= grid[None, :]
    np.add.at(out, rows, hit * inc[:, None])


def simulate_segments(model, n_paths, n_segments, grid, seed, truncation_n=None,
                      exact_remainder=True, first_path=0, counts=False):
    """Z over ``n_segments`` independent unit-time segments per path.

    Returns arrays ``(z1, z2)`` of shape (n_paths, n_segments, len(grid)); each
    segment starts from 0.  With ``counts=True`` also returns the number of
    nonzero terms per component with R <= grid point, same shape.
    """
    grid = np.asarray(grid, dtype=float)
    n = truncation_n or min_truncation(model)
    G = len(grid)
    z = np.zeros((2, n_paths * n_segments, G))
    cnt = np.zeros((2, n_paths * n_segments, G), dtype=np.int64) if counts else None
    lam2 = model.sub2.lam
    per_path = n_segments * _U_PER_TERM * n
    chunk = max(1, _CHUNK_VALUES // per_path)
    for start in range(0, n_paths, chunk):
        stop = min(n_paths, start + chunk)
        m = stop - start
        u = np.empty((m, n_segments, _U_PER_TERM, n))
        tails = []
        for j in range(m):
            main, tail, extra = _path_streams(seed, first_path + start + j)
            u[j] = main.random((n_segments, _U_PER_TERM, n))
            tails.append((tail, extra))
        u = u.reshape(m * n_segments, _U_PER_TERM, n).transpose(1, 0, 2)
        gamma = np.cumsum(-np.log1p(-u[0]), axis=1)
        rows = np.arange(start * n_segments, stop * n_segments)
        r, inc1, inc2, tau1, tau2 = _terms(model, gamma, u)
        rr = np.repeat(rows, n)
        for k, (inc, tau) in enumerate(((inc1, tau1), (inc2, tau2))):
            _accumulate(z[k], rr, r.ravel(), inc.ravel(), grid)
            if counts:
                _accumulate(cnt[k], rr, r.ravel(), (tau > 0).ravel().astype(np.int64), grid)
        last = gamma[:, -1].copy()
        # rare: epochs have not passed lam_2 yet, extend those segments
        for i in np.flatnonzero(last < lam2):
            path, seg = divmod(i, n_segments)
            extra = tails[path][1]
            while last[i] < lam2:
                ue = extra.random((_U_PER_TERM, n))
                ge = last[i] + np.cumsum(-np.log1p(-ue[0]))
                r_e, i1, i2, t1, t2 = _terms(model, ge, ue)
                row = np.full(n, rows[i])
                for k, (inc, tau) in enumerate(((i1, t1), (i2, t2))):
                    _accumulate(z[k], row, r_e, inc, grid)
                    if counts:
                        _accumulate(cnt[k], row, r_e, (tau > 0).astype(np.int64), grid)
                last[i] = ge[-1]
        if exact_remainder:
            draws = [_remainder_draws(model.sub1.lam, tails[j][0], n_segments) for j in range(m)]
            seg, r_t, inc_t, tau_t = _remainder(
                model, last, np.concatenate([d[0] for d in draws]),
                np.concatenate([d[1] for d in draws], axis=1))
            _accumulate(z[0], rows[seg], r_t, inc_t, grid)
            if counts:
                _accumulate(cnt[0], rows[seg], r_t, (tau_t > 0).astype(np.int64), grid)
    shape = (n_paths, n_segments, G)
    z1, z2 = z[0].reshape(shape), z[1].reshape(shape)
    if counts:
        return z1, z2, cnt[0].reshape(shape), cnt[1].reshape(shape)
    return z1, z2


def simulate(model, cfg):
    """Independent trajectories on the evaluation grid of ``cfg``."""
    cfg = cfg.resolved(model)
    z1, z2 = simulate_segments(model, cfg.n_paths, 1, cfg.eval_grid, cfg.seed,
                               cfg.truncation_n, cfg.exact_remainder)
    times = np.asarray(cfg.eval_grid)
    return [Trajectory(times, z1[i, 0], z2[i, 0]) for i in range(cfg.n_paths)]


def simulate_bars(model, n_paths, n_bars, seed, bar_duration=0.25, truncation_n=None,
                  exact_remainder=True):
    """Per-bar increments (n_paths, n_bars) of both components.

    Unit segments are concatenated; ``1 / bar_duration`` must be an integer.
    """
    per_unit = 1.0 / bar_duration
    if abs(per_unit - round(per_unit)) > 1e-9 or per_unit < 1:
        raise ConfigError("bar_duration must be 1/k for a positive integer k")
    per_unit = int(round(per_unit))
    n_seg = -(-n_bars // per_unit)
    grid = bar_duration * np.arange(1, per_unit + 1)
    z1, z2 = simulate_segments(model, n_paths, n_seg, grid, seed, truncation_n, exact_remainder)
    d1 = np.diff(z1, axis=2, prepend=0.0).reshape(n_paths, -1)[:, :n_bars]
    d2 = np.diff(z2, axis=2, prepend=0.0).reshape(n_paths, -1)[:, :n_bars]
    return d1, d2


class CfEstimate(NamedTuple):
    value: complex
    se_real: float
    se_imag: float

    @property
    def se(self):
        """Standard error of the complex estimate (modulus)."""
        return math.hypot(self.se_real, self.se_imag)


def empirical_cf(paths, u, s):
    """Monte Carlo estimate of E exp(i(u1 Z1(s) + u2 Z2(s))) with standard errors."""
    if len(paths) == 0:
        raise ValueError("empirical_cf needs at least one path")
    vals = np.array([p.at(s) for p in paths])
    return empirical_cf_values(vals[:, 0], vals[:, 1], u)


def empirical_cf_values(z1, z2, u):
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    n = len(z1)
    if n == 0:
        raise ValueError("empirical_cf needs at least one path")
    arg = u[0] * z1 + u[1] * z2
    c, s_ = np.cos(arg), np.sin(arg)
    se_r = float(c.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    se_i = float(s_.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return CfEstimate(complex(c.mean(), s_.mean()), se_r, se_i)


# ---------------------------------------------------------------------------
# Laplace exponent of (T1, T2) and the characteristic function of X(s)

_T_LIMIT = 9.0
_INNER_GRADING = np.concatenate([[0.0], 0.5 * 0.3 ** np.arange(8, 0, -1), [0.5],
                                 1.0 - 0.5 * 0.3 ** np.arange(1, 9), [1.0]])


def _gl_rule(panels, nodes, lo=-_T_LIMIT, hi=_T_LIMIT):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    pts = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * x
    return pts.ravel(), (half[:, None] * w).ravel()


def _phi(t):
    return np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


def _jump(p, t):
    return np.exp(p.mu_ln + p.sigma_ln * t)


def _expm1_jump(z, x):
    return np.expm1(z * x) if isinstance(z, float) else np.exp(z * x) - 1.0


def _axis_part(c, p, other, z, panels, nodes):
    """Jumps of one component alone: tail U(x) - F(U(x), lam_other)."""
    if z == 0:
        return 0j
    t, w = _gl_rule(panels, nodes)
    u = p.lam * special.ndtr(-t)
    only = 1.0 - conditional_cdf(c, other.lam / u)
    return complex(np.sum(w * p.lam * _phi(t) * only * (np.exp(z * _jump(p, t)) - 1.0)))


def _common_part(c, p1, p2, z1, z2, panels, nodes):
    """Simultaneous jumps: integral of (e^{z1 x + z2 y} - 1) against joint_jump_density.

    Coordinates: t = standardized log y and w = H(U_1(x) / U_2(y)), where the
    density becomes the constant 1 (times lam_2 phi(t) from dU_2).
    """
    if z1 == 0 and z2 == 0:
        return 0j
    t, wt = _gl_rule(panels, nodes)
    v = p2.lam * special.ndtr(-t)
    top = conditional_cdf(c, p1.lam / v)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    g = _INNER_GRADING
    frac = (0.5 * (g[:-1] + g[1:]))[:, None] + 0.5 * np.diff(g)[:, None] * xg
    wfrac = (0.5 * np.diff(g)[:, None] * wg).ravel()
    w = top[:, None] * frac.ravel()[None, :]
    ww = top[:, None] * wfrac[None, :]
    q = conditional_quantile(c, np.clip(w, 1e-300, None))
    x = inverse_tail_integral(p1, np.clip(q * v[:, None], 1e-300, None))
    y = _jump(p2, t)
    integrand = np.exp(z1 * x + z2 * y[:, None]) - 1.0
    inner = np.sum(ww * integrand, axis=1)
    return complex(np.sum(wt * p2.lam * _phi(t) * inner))


def subordinator_exponent(model, z1, z2, tol=1e-9, max_level=4):
    """psi_T(z1, z2) = log E exp(z1 T1(1) + z2 T2(1)) for Re z_k <= 0.

    Composite Gauss-Legendre, doubled until two levels agree to ``tol``.
    """
    c, p1, p2 = model.copula, model.sub1, model.sub2
    history = []
    prev = None
    for level in range(max_level + 1):
        panels, nodes = 24 * 2 ** level, 12
        val = (_common_part(c, p1, p2, z1, z2, panels, nodes)
               + _axis_part(c, p1, p2, z1, panels, nodes)
               + _axis_part(c, p2, p1, z2, panels, nodes))
        history.append(val)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
    raise NumericalFailure("subordinator Laplace exponent quadrature did not converge",
                           {"z": (z1, z2), "levels": history, "tol": tol})


def theoretical_cf(model, u, s):
    """E exp(i<u, X(s)>) = exp(s psi_T(phi_S1(u1), phi_S2(u2)))."""
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    z1 = complex(char_exponent(model.stable1, u[0]))
    z2 = complex(char_exponent(model.stable2, u[1]))
    return complex(np.exp(s * subordinator_exponent(model, z1, z2)))


def common_jump_intensity(model):
    return common_intensity(model.copula, model.sub1, model.sub2)
