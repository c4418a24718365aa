"""Compound-Poisson subordinators with log-normal jump sizes.

The tail integral is ``U(x) = lam * P(J >= x)`` for log-normal jump size ``J``.
Likelihood formulas elsewhere write the same factor as ``0.5*lam*(1 - Erf(x))``
with ``Erf(x) = erf((ln x - mu_ln) / (sqrt(2) sigma_ln))``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalFailure

LAPLACE_EPSABS = 1e-9


@dataclass(frozen=True)
class LogNormalCppParams:
    lam: float
    mu_ln: float
    sigma_ln: float

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"jump intensity must be > 0, got {self.lam}")
        if not self.sigma_ln > 0:
            raise DomainError(f"log-std must be > 0, got {self.sigma_ln}")
        if not math.isfinite(self.mu_ln):
            raise DomainError("log-mean must be finite")

    @property
    def mean_jump(self):
        return math.exp(self.mu_ln + 0.5 * self.sigma_ln ** 2)

    def standardize(self, x):
        """(ln x - mu_ln) / sigma_ln."""
        with np.errstate(divide="ignore"):
            return (np.log(x) - self.mu_ln) / self.sigma_ln


@dataclass(frozen=True)
class JumpPath:
    horizon: float
    times: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        if not self.horizon > 0:
            raise DomainError("horizon must be > 0")
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.sizes, dtype=float)
        if t.shape != s.shape or t.ndim != 1:
            raise DomainError("times and sizes must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0) or (len(t) and (t[0] <= 0 or t[-1] > self.horizon)):
            raise DomainError("event times must be strictly increasing in (0, horizon]")
        if np.any(s <= 0):
            raise DomainError("jump sizes must be positive")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sizes", s)

    def value(self, s):
        """Cumulative jump sum T(s)."""
        return float(self.sizes[self.times <= s].sum())


def _scalar(out):
    return out[()] if np.ndim(out) == 0 else out


def tail_integral(p, x):
    """U(x): lam at x = 0, lam * lognormal survival for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("tail integral is defined for x >= 0")
    out = p.lam * special.ndtr(-p.standardize(np.where(x > 0, x, 1.0)))
    return _scalar(np.where(x > 0, out, p.lam))


def tail_integral_derivative(p, x):
    """U'(x) = -lam * lognormal density (x > 0)."""
    x = np.asarray(x, dtype=float)
    z = p.standardize(x)
    return _scalar(-p.lam * np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * p.sigma_ln * x))


def _tail_above(p, x, y):
    return p.lam * special.ndtr(-p.standardize(x)) > y


def inverse_tail_integral(p, y):
    """Generalized inverse inf{x > 0 : U(x) <= y}; 0 when y >= lam.

    Where rounding leaves U(x) > y, x is moved up to the first float with
    U(x) <= y, so the result always lies in the sublevel set.
    """
    y0 = np.asarray(y, dtype=float)
    if np.any(~(y0 > 0)):
        raise DomainError("inverse tail integral needs y > 0")
    y = y0.ravel()
    inside = y < p.lam
    ratio = np.where(inside, y / p.lam, 0.5)
    x = np.exp(p.mu_ln - p.sigma_ln * special.ndtri(ratio))
    bad = inside & _tail_above(p, x, y)
    if bad.any():
        # bracket upward, then bisect down to adjacent floats
        lo, hi, yb = x[bad], x[bad].copy(), y[bad]
        step = np.finfo(float).eps
        while True:
            up = _tail_above(p, hi, yb)
            if not up.any():
                break
            hi = np.where(up, hi * (1.0 + step), hi)
            step *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            open_ = (mid > lo) & (mid < hi)
            if not open_.any():
                break
            above = _tail_above(p, mid, yb)
            lo = np.where(open_ & above, mid, lo)
            hi = np.where(open_ & ~above, mid, hi)
        x[bad] = hi
    return _scalar(np.where(inside, x, 0.0).reshape(y0.shape))


def _lognormal_mgf(p, z):
    """E[exp(zJ)] for Re z <= 0 by quadrature over the standardized log jump."""
    mu, s = p.mu_ln, p.sigma_ln

    def part(t, fn):
        x = math.exp(mu + s * t)
        return fn(np.exp(z * x)) * math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)

    out = []
    for fn in (np.real, np.imag):
        if fn is np.imag and z.imag == 0:
            out.append(0.0)
            continue
        val, err = integrate.quad(part, -12.0, 12.0, args=(fn,), points=[0.0],
                                  epsabs=LAPLACE_EPSABS, epsrel=1e-10, limit=400)
        if not np.isfinite(val) or err > 10 * LAPLACE_EPSABS + 1e-9 * abs(val):
            raise NumericalFailure("log-normal Laplace transform did not converge",
                                   {"z": z, "estimate": val, "error": err})
        out.append(val)
    return complex(out[0], out[1])


def laplace_exponent(p, z):
    """psi(z) = lam * (E[exp(zJ)] - 1) for complex z with Re z <= 0."""
    z = complex(z)
    if z.real > 0:
        raise DomainError("Laplace exponent requires Re z <= 0")
    if z == 0:
        return 0j
    return p.lam * (_lognormal_mgf(p, z) - 1.0)


def sample_path(p, horizon, rng):
    """Jump times and sizes of the subordinator on (0, horizon]."""
    if not horizon > 0:
        raise DomainError("horizon must be > 0")
    n = rng.poisson(p.lam * horizon)
    times = np.sort(horizon * (1.0 - rng.random(n)))
    sizes = np.exp(p.mu_ln + p.sigma_ln * rng.standard_normal(n))
    return JumpPath(horizon, times, sizes)
