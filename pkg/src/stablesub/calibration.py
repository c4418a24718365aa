"""Parameter estimation from bars and jump data.

Stable part: drift per trade, standardized residuals, quasi-ML (beta, sigma)
for each alpha on a grid, and alpha chosen by the squared distance between
the fitted density and a kernel estimate.  Subordinator part: maximum
likelihood for the Clayton-coupled log-normal compound-Poisson pair.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from functools import lru_cache
import math
import os
from typing import NamedTuple

import numpy as np
from scipy import optimize, special
from scipy.interpolate import CubicSpline

from .errors import DegenerateError, DomainError, NumericalFailure
from .levy_copula import ClaytonParams, conditional_quantile, copula_value
from .stable import StableCdf, StableParams, cms_transform, fast_density
from .subordinator import LogNormalCppParams, inverse_tail_integral

DEFAULT_ALPHA_GRID = tuple(np.round(np.arange(1.05, 2.0 + 1e-9, 0.01), 2))
QMLE_FATOL = 1e-8
QMLE_MAXITER = 2000


def max_workers():
    """Thread cap from STABLESUB_THREADS (default: CPU count)."""
    raw = os.environ.get("STABLESUB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """Ordered map; runs serially when only one worker is allowed."""
    items = list(items)
    n = min(max_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# stable part

def estimate_mu(bars):
    """Ratio of mean log-return to mean trade count over the return bars."""
    r, n = bars.log_returns, bars.return_trades
    if len(r) == 0:
        raise DegenerateError("need at least two bars in one run")
    if np.any(n <= 0):
        raise DomainError("trade counts must be positive")
    return float(np.mean(r) / np.mean(n))


def standardized_residuals(bars, alpha, mu_hat):
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (1, 2], got {alpha}")
    r, n = bars.log_returns, bars.return_trades
    if np.any(n <= 0):
        raise DomainError("trade counts must be positive")
    return n ** (-1.0 / alpha) * (r - mu_hat * n)


class _LogDensityTable:
    """log f(z; alpha, beta) for S_alpha(1, beta, 0), cubic in beta and in asinh z."""

    def __init__(self, alpha, n_beta=21, n_z=401, limit=1e4):
        self.alpha = alpha
        self.limit = limit
        self.t = np.linspace(-np.arcsinh(limit), np.arcsinh(limit), n_z)
        z = np.sinh(self.t)
        betas = np.linspace(-1.0, 1.0, n_beta)
        # floor keeps the light tail of beta = +-1 finite
        rows = [np.log(np.maximum(fast_density(StableParams(alpha, b), z), 1e-300)) for b in betas]
        self.spline = CubicSpline(betas, np.array(rows), axis=0)

    def __call__(self, z, beta):
        z = np.asarray(z, dtype=float)
        row = self.spline(beta)
        out = np.array(CubicSpline(self.t, row)(np.arcsinh(z)), dtype=float)
        far = np.abs(z) > self.limit
        if far.any():
            with np.errstate(divide="ignore"):
                out[far] = np.log(fast_density(StableParams(self.alpha, beta), z[far]))
        return out


@lru_cache(maxsize=256)
def _table(alpha):
    return _LogDensityTable(alpha)


def stable_logpdf(z, alpha, beta, sigma):
    """log density of S_alpha(sigma, beta, 0) at z (tabulated for alpha < 2)."""
    z = np.asarray(z, dtype=float)
    if alpha == 2.0:
        return -(z / sigma) ** 2 / 4.0 - math.log(2.0 * sigma * math.sqrt(math.pi))
    return _table(float(alpha))(z / sigma, beta) - math.log(sigma)


class QmleFit(NamedTuple):
    beta: float
    sigma: float
    loglik: float
    converged: bool


def fit_beta_sigma(residuals, alpha):
    """Quasi-ML (beta, sigma) for S_alpha(sigma, beta, 0) by Nelder-Mead.

    Start: beta = 0, sigma = IQR / 2.  Search variables (beta, log sigma),
    beta clipped to [-1, 1]; stop when the objective changes by < 1e-8.
    """
    z = np.asarray(residuals, dtype=float)
    if alpha == 1.0 or not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2] and differ from 1, got {alpha}")
    if len(z) < 50:
        raise DomainError("need at least 50 residuals")
    q75, q25 = np.percentile(z, [75, 25])
    iqr = q75 - q25
    if not iqr > 0:
        raise DegenerateError("residuals have zero interquartile range")
    # optimize in units of the start scale; the objective is shift-free in log sigma
    z0 = z / (iqr / 2.0)

    if alpha == 2.0:
        sigma = float(np.sqrt(np.mean(z * z) / 2.0))
        if not sigma > 0:
            raise DegenerateError("residuals are all zero")
        return QmleFit(0.0, sigma, float(np.sum(stable_logpdf(z, 2.0, 0.0, sigma))), True)

    def negll(v):
        beta = float(np.clip(v[0], -1.0, 1.0))
        return -float(np.sum(stable_logpdf(z0, alpha, beta, math.exp(v[1]))))

    res = optimize.minimize(negll, [0.0, 0.0], method="Nelder-Mead",
                            options={"fatol": QMLE_FATOL, "xatol": 1e-8,
                                     "maxiter": QMLE_MAXITER,
                                     "initial_simplex": [[0.0, 0.0], [0.3, 0.0], [0.0, 0.3]]})
    beta = float(np.clip(res.x[0], -1.0, 1.0))
    sigma = float(math.exp(res.x[1]) * iqr / 2.0)
    loglik = -res.fun - len(z) * math.log(iqr / 2.0)
    return QmleFit(beta, sigma, float(loglik), bool(res.success))


def silverman_bandwidth(residuals):
    z = np.asarray(residuals, dtype=float)
    q75, q25 = np.percentile(z, [75, 25])
    spread = min(np.std(z, ddof=1), (q75 - q25) / 1.34)
    return 1.06 * spread * len(z) ** -0.2


def kde_density(residuals, x):
    """Gaussian-kernel density estimate with Silverman's bandwidth."""
    z = np.asarray(residuals, dtype=float)
    if len(z) < 2:
        raise DomainError("kde needs at least two residuals")
    h = silverman_bandwidth(z)
    if not h > 0:
        raise DegenerateError("kernel bandwidth is zero")
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    out = np.empty(len(flat))
    for i in range(0, len(flat), 2048):
        d = (flat[i:i + 2048, None] - z[None, :]) / h
        out[i:i + 2048] = np.exp(-0.5 * d * d).sum(axis=1)
    out *= 1.0 / (len(z) * h * math.sqrt(2.0 * math.pi))
    out = out.reshape(x.shape)
    return out[()] if out.ndim == 0 else out


def selection_criterion(residuals, alpha, beta, sigma):
    """R(alpha): sum of squared gaps between fitted stable density and the KDE at the residuals."""
    z = np.asarray(residuals, dtype=float)
    p = np.exp(stable_logpdf(z, alpha, beta, sigma))
    return float(np.sum((p - kde_density(z, z)) ** 2))


@dataclass(frozen=True)
class StableFitResult:
    best: StableParams
    r_curve: list
    mu_hat: float
    failed: tuple = ()

    def to_dict(self):
        return {
            "best": asdict(self.best),
            "mu_hat": self.mu_hat,
            "r_curve": [{"alpha": a, "R": r, "beta": b, "sigma": s, "converged": c}
                        for a, r, b, s, c in self.r_curve],
            "failed_alphas": list(self.failed),
        }


def _grid_point(args):
    bars, alpha, mu_hat = args
    z = standardized_residuals(bars, alpha, mu_hat)
    fit = fit_beta_sigma(z, alpha)
    r = selection_criterion(z, alpha, fit.beta, fit.sigma)
    return (float(alpha), r, fit.beta, fit.sigma, fit.converged)


def fit_stable(bars, alpha_grid=None, min_points=5):
    """Grid search over alpha; ties go to the smallest alpha.

    ``r_curve`` rows are (alpha, R, beta_hat, sigma_hat, converged).
    """
    grid = DEFAULT_ALPHA_GRID if alpha_grid is None or len(alpha_grid) == 0 else tuple(alpha_grid)
    if any(not 1.0 < a <= 2.0 for a in grid):
        raise DomainError("alpha grid must lie in (1, 2]")
    if len(grid) < min_points:
        raise DomainError(f"alpha grid needs at least {min_points} points")
    grid = tuple(sorted(set(float(a) for a in grid)))
    mu_hat = estimate_mu(bars)

    def run(alpha):
        try:
            return _grid_point((bars, alpha, mu_hat))
        except (NumericalFailure, DegenerateError, FloatingPointError):
            return None

    rows = parallel_map(run, grid)
    curve = [r for r in rows if r is not None and math.isfinite(r[1])]
    failed = tuple(a for a, r in zip(grid, rows) if r is None or not math.isfinite(r[1]))
    if not curve:
        raise NumericalFailure("stable fit failed at every grid point", {"grid": grid})
    best = min(curve, key=lambda row: (row[1], row[0]))
    return StableFitResult(StableParams(best[0], best[2], best[3], mu_hat), curve, mu_hat, failed)


def pp_points(residuals, alpha, beta, sigma):
    """(empirical, theoretical) probabilities at the sorted residuals."""
    z = np.sort(np.asarray(residuals, dtype=float))
    n = len(z)
    emp = (np.arange(1, n + 1) - 0.5) / n
    if alpha == 2.0:
        theo = special.ndtr(z / (math.sqrt(2.0) * sigma))
    else:
        theo = StableCdf(StableParams(alpha, beta, sigma))(z)
    return emp, theo


def pp_max_deviation(residuals, alpha, beta, sigma):
    emp, theo = pp_points(residuals, alpha, beta, sigma)
    return float(np.max(np.abs(emp - theo)))


def gaussian_baseline(bars, mu_hat=None):
    """The alpha = 2 fit of the same pipeline: (residuals, QmleFit)."""
    mu_hat = estimate_mu(bars) if mu_hat is None else mu_hat
    z = standardized_residuals(bars, 2.0, mu_hat)
    return z, fit_beta_sigma(z, 2.0)


def synthetic_bars(stable, trades, n_bars, rng, timestamps=None, price0=100.0, counts=None):
    """Bars whose log-return over a bar with N trades is S(N) for the stable process S.

    Trade counts are one rounded log-normal jump per bar (at least 1) from
    ``trades``, unless ``counts`` gives them.  The first bar's return is unused.
    """
    from .data_io import BarSeries, synthetic_calendar
    if counts is None:
        n = np.exp(trades.mu_ln + trades.sigma_ln * rng.standard_normal(n_bars))
    else:
        n = np.asarray(counts, dtype=float)
        n_bars = len(n)
    n = np.maximum(1, np.rint(n)).astype(np.int64)
    u = rng.random((2, n_bars))
    g = cms_transform(stable.alpha, stable.beta, stable.sigma, 0.0, u[0], u[1])
    r = g * n ** (1.0 / stable.alpha) + stable.mu * n
    r[0] = 0.0
    prices = price0 * np.exp(np.cumsum(r))
    ts = synthetic_calendar(n_bars) if timestamps is None else timestamps
    return BarSeries(ts, prices, n)


# ---------------------------------------------------------------------------
# subordinator / copula part

COPULA_FIELDS = ("lambda1", "lambda2", "mu_ln1", "mu_ln2", "sigma_ln1", "sigma_ln2", "delta")


@dataclass(frozen=True)
class CopulaFitResult:
    lambda1: float
    lambda2: float
    mu_ln1: float
    mu_ln2: float
    sigma_ln1: float
    sigma_ln2: float
    delta: float
    loglik: float = float("nan")
    converged: bool = False

    def vector(self):
        return np.array([getattr(self, f) for f in COPULA_FIELDS])

    def subordinators(self):
        return (LogNormalCppParams(self.lambda1, self.mu_ln1, self.sigma_ln1),
                LogNormalCppParams(self.lambda2, self.mu_ln2, self.sigma_ln2))

    def copula(self):
        return ClaytonParams(self.delta)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_vector(cls, v, loglik=float("nan"), converged=False):
        return cls(*[float(x) for x in v], loglik=float(loglik), converged=bool(converged))


def _as_vector(params):
    if isinstance(params, CopulaFitResult):
        return params.vector()
    if isinstance(params, dict):
        return np.array([params[f] for f in COPULA_FIELDS], dtype=float)
    return np.asarray(params, dtype=float)


def copula_loglik(params, jumps, T):
    """log L of common jumps (x_i, y_i) observed over [0, T].

    With Erf_k(x) = erf((ln x - mu_k) / (sqrt(2) sigma_k)) and
    lam_par = F(lam_1, lam_2; delta):

        log L = n log[(1+delta)(lam_1 lam_2)^(delta+1) / (4^delta sigma_1 sigma_2 2 pi)]
                - sum log x_i y_i - lam_par T
                - 0.5 sum z1_i^2 - 0.5 sum z2_i^2
                + (-1/delta - 2) sum log([0.5 lam_1 (1 - Erf_1)]^delta + [0.5 lam_2 (1 - Erf_2)]^delta)
                + delta sum log[(1 - Erf_1)(1 - Erf_2)]

    ``params`` is a CopulaFitResult, a dict or a 7-vector in COPULA_FIELDS
    order.  Non-positive lambda, sigma or delta give -inf.
    """
    lam1, lam2, m1, m2, s1, s2, d = _as_vector(params)
    if min(lam1, lam2, s1, s2, d) <= 0 or not np.all(np.isfinite([lam1, lam2, m1, m2, s1, s2, d])):
        return -math.inf
    jumps = np.asarray(jumps, dtype=float).reshape(-1, 2)
    if T < 0:
        raise DomainError("T must be >= 0")
    if np.any(jumps <= 0):
        raise DomainError("jump sizes must be positive")
    n = len(jumps)
    lam_par = copula_value(ClaytonParams(d), [lam1, lam2])
    if n == 0:
        return -lam_par * T
    lx, ly = np.log(jumps[:, 0]), np.log(jumps[:, 1])
    z1, z2 = (lx - m1) / s1, (ly - m2) / s2
    # log(1 - Erf) = log(2 * ndtr(-z)), kept accurate in the upper tail
    l1 = math.log(2.0) + special.log_ndtr(-z1)
    l2 = math.log(2.0) + special.log_ndtr(-z2)
    const = (math.log1p(d) + (d + 1.0) * math.log(lam1 * lam2) - d * math.log(4.0)
             - math.log(s1 * s2 * 2.0 * math.pi))
    mix = np.logaddexp(d * (math.log(0.5 * lam1) + l1), d * (math.log(0.5 * lam2) + l2))
    return float(n * const - np.sum(lx + ly) - lam_par * T
                 - 0.5 * np.sum(z1 * z1) - 0.5 * np.sum(z2 * z2)
                 + (-1.0 / d - 2.0) * np.sum(mix) + d * np.sum(l1 + l2))


def _pack(v):
    lam1, lam2, m1, m2, s1, s2, d = v
    return np.array([math.log(lam1), math.log(lam2), m1, m2, math.log(s1), math.log(s2), math.log(d)])


def _unpack(w):
    return np.array([math.exp(w[0]), math.exp(w[1]), w[2], w[3],
                     math.exp(w[4]), math.exp(w[5]), math.exp(w[6])])


def default_starts(jumps, T):
    """Five starts: log-moment marginals, lam_k = 1.5 n / T, delta in {0.5, 1, 2, 4, 8}."""
    jumps = np.asarray(jumps, dtype=float)
    lx, ly = np.log(jumps[:, 0]), np.log(jumps[:, 1])
    lam = 1.5 * len(jumps) / T
    base = [lam, lam, lx.mean(), ly.mean(), lx.std(ddof=1), ly.std(ddof=1)]
    return [np.array(base + [d]) for d in (0.5, 1.0, 2.0, 4.0, 8.0)]


def fit_copula(jumps, T, start=None, maxiter=6000):
    """Maximize copula_loglik by Nelder-Mead in (log lam, mu, log sigma, log delta).

    Five starts: ``start`` (if given) replaces the first default start.
    Each start runs Nelder-Mead, then one restart from its optimum.  The best
    converged run wins; ``converged`` is False if no run converged.
    """
    jumps = np.asarray(jumps, dtype=float).reshape(-1, 2)
    if len(jumps) < 50:
        raise DomainError("need at least 50 jump pairs")
    if not T > 0:
        raise DomainError("T must be > 0")
    starts = default_starts(jumps, T)
    if start is not None:
        starts[0] = _as_vector(start)

    def objective(w):
        try:
            val = copula_loglik(_unpack(w), jumps, T)
        except (OverflowError, FloatingPointError):
            return math.inf
        return -val if math.isfinite(val) else math.inf

    def run(s):
        w = _pack(s)
        ok = False
        for _ in range(2):
            res = optimize.minimize(objective, w, method="Nelder-Mead",
                                    options={"maxiter": maxiter, "maxfev": 2 * maxiter,
                                             "xatol": 1e-7, "fatol": 1e-9, "adaptive": True})
            w, ok = res.x, bool(res.success)
        return w, -res.fun, ok

    runs = parallel_map(run, starts)
    good = [r for r in runs if r[2] and math.isfinite(r[1])]
    pool = good or [r for r in runs if math.isfinite(r[1])]
    if not pool:
        return CopulaFitResult.from_vector(starts[0], -math.inf, False)
    w, ll, _ = max(pool, key=lambda r: r[1])
    return CopulaFitResult.from_vector(_unpack(w), ll, bool(good))


def synthetic_common_jumps(copula, sub1, sub2, T, rng):
    """Common jumps over [0, T] drawn from the Levy measure of (T1, T2).

    Candidates v ~ U(0, lam_2) at rate lam_2 T, Q ~ H; a candidate is a common
    jump when Q v < lam_1, with sizes (U_1^-1(Q v), U_2^-1(v)).
    """
    k = rng.poisson(sub2.lam * T)
    u = rng.random((2, k))
    v = sub2.lam * (1.0 - u[0])
    q = conditional_quantile(copula, 1.0 - u[1])
    pos = q * v
    keep = pos < sub1.lam
    return np.column_stack([inverse_tail_integral(sub1, pos[keep]), inverse_tail_integral(sub2, v[keep])])


class KsResult(NamedTuple):
    d_stat: float
    p_value: float
    n: int


def ks_test(samples, cdf):
    """One-sample two-sided Kolmogorov-Smirnov with the asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise DomainError("ks_test needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    d = min(max(d, 0.0), 1.0)
    return KsResult(d, float(special.kolmogorov(math.sqrt(n) * d)), n)


def lognormal_cdf(mu_ln, sigma_ln):
    def cdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return special.ndtr((np.log(x) - mu_ln) / sigma_ln)
    return cdf
