"""Clayton Levy copula for positive jumps.

    F(u_1, ..., u_d) = (u_1^-delta + ... + u_d^-delta)^(-1/delta)

For d = 2 the conditional law of the first tail coordinate given the second,
dF(u, v)/dv, depends on u/v only:

    dF/dv (u, v) = H(u / v),   H(z) = (z^-delta + 1)^(-(1 + delta)/delta),

so ``h(xi, v) = v * xi`` with ``xi ~ H`` reproduces it.  That is the
h-function used by the series simulator.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError
from .subordinator import tail_integral, tail_integral_derivative


@dataclass(frozen=True)
class ClaytonParams:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"Clayton delta must be > 0, got {self.delta}")


def copula_value(c, u):
    """F(u; delta) for one point ``u`` (length d >= 2) or an (n, d) array of points.

    Zero coordinates give 0; infinite coordinates drop out of the sum.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[1] < 2:
        raise DomainError("Levy copula needs d >= 2 coordinates")
    if np.any(u < 0) or np.any(np.isnan(u)):
        raise DomainError("copula arguments must be >= 0")
    finite = np.isfinite(u)
    if np.any(~finite.any(axis=1)):
        raise DomainError("all coordinates infinite: F is not defined there")
    d = c.delta
    with np.errstate(divide="ignore"):
        terms = np.where(finite, -d * np.log(np.where(finite, u, 1.0)), -np.inf)
    out = np.exp(-logsumexp(terms, axis=1) / d)
    out = np.where(np.any(u == 0, axis=1), 0.0, out)
    return float(out[0]) if single else out


def _log_h(c, z):
    d = c.delta
    with np.errstate(divide="ignore"):
        return -(1.0 + d) / d * np.logaddexp(-d * np.log(z), 0.0)


def conditional_cdf(c, z):
    """H(z) = (z^-delta + 1)^(-(1+delta)/delta) for z >= 0."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("conditional_cdf needs z >= 0")
    out = np.where(z > 0, np.exp(_log_h(c, np.where(z > 0, z, 1.0))), 0.0)
    return out[()] if out.ndim == 0 else out


def conditional_density(c, z):
    """H'(z) = (1+delta) z^(-delta-1) (z^-delta + 1)^(-1/delta - 2)."""
    z = np.asarray(z, dtype=float)
    d = c.delta
    lz = np.log(z)
    return (1.0 + d) * np.exp(-(d + 1.0) * lz - (1.0 / d + 2.0) * np.logaddexp(-d * lz, 0.0))


def conditional_quantile(c, w):
    """Inverse of H: (w^(-delta/(1+delta)) - 1)^(-1/delta)."""
    w = np.asarray(w, dtype=float)
    d = c.delta
    with np.errstate(divide="ignore"):
        return np.exp(-np.log(np.expm1(-d / (1.0 + d) * np.log(w))) / d)


def sample_conditional(c, rng, size=None):
    """Draw(s) from H by the inverse-function method."""
    w = 1.0 - rng.random(size)
    return conditional_quantile(c, w)


def h_transform(c, xi, v):
    """h(xi, v) = v * xi."""
    xi = np.asarray(xi, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(xi <= 0) or np.any(v < 0):
        raise DomainError("h_transform needs xi > 0 and v >= 0")
    return v * xi


def joint_tail(c, p1, p2, x1, x2):
    """U(x1, x2) = F(U_1(x1), U_2(x2))."""
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    pts = np.stack([np.ravel(tail_integral(p1, x1)), np.ravel(tail_integral(p2, x2))], axis=1)
    out = copula_value(c, pts).reshape(x1.shape)
    return out[()] if out.ndim == 0 else out


def copula_mixed_density(c, u, v):
    """d^2 F / du dv = (1+delta) (uv)^(-delta-1) (u^-delta + v^-delta)^(-1/delta-2)."""
    d = c.delta
    lu, lv = np.log(u), np.log(v)
    return (1.0 + d) * np.exp(-(d + 1.0) * (lu + lv)
                              - (1.0 / d + 2.0) * np.logaddexp(-d * lu, -d * lv))


def joint_jump_density(c, p1, p2, x, y):
    """Density of simultaneous jumps (x, y): d^2 U(x, y) / dx dy."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("joint jump density needs x > 0 and y > 0")
    u = tail_integral(p1, x)
    v = tail_integral(p2, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = copula_mixed_density(c, u, v) * tail_integral_derivative(p1, x) * tail_integral_derivative(p2, y)
    out = np.where((u > 0) & (v > 0), dens, 0.0)
    return out[()] if out.ndim == 0 else out


def common_intensity(c, p1, p2):
    """Intensity of simultaneous jumps, F(lam_1, lam_2)."""
    return copula_value(c, [p1.lam, p2.lam])


def axis_tail(c, p, other, x):
    """Tail integral of jumps in one component only: U(x) - F(U(x), lam_other)."""
    u = np.atleast_1d(tail_integral(p, x))
    pts = np.stack([u, np.full_like(u, other.lam)], axis=1)
    out = u - copula_value(c, pts)
    return out[0] if np.ndim(x) == 0 else out


def sample_conditional_general(h_functions, xi_sampler, v, rng):
    """d > 2 hook: apply user h-functions to one draw of (xi_1, ..., xi_{d-1}).

    Only the bivariate Clayton instance (``h_transform`` with
    ``sample_conditional``) ships with the package.
    """
    xi = np.atleast_1d(xi_sampler(rng))
    if len(xi) != len(h_functions):
        raise DomainError("need one h-function per conditional coordinate")
    return np.array([h(x, v) for h, x in zip(h_functions, xi)])
