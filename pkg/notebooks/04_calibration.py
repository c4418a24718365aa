# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Calibration on synthetic bars
#
# Stable parameters from returns per trade count, then the clock and copula
# parameters from paired trade counts.

# %%
import numpy as np

from stablesub.calibration import (fit_copula, fit_stable, gaussian_baseline, ks_test, lognormal_cdf,
                                   pp_max_deviation, standardized_residuals, synthetic_bars,
                                   synthetic_common_jumps)
from stablesub.levy_copula import ClaytonParams
from stablesub.stable import StableParams
from stablesub.subordinator import LogNormalCppParams

rng = np.random.default_rng(4)
truth = StableParams(1.62, 0.09, 1.83e-05, 3.02e-09)
bars = synthetic_bars(truth, LogNormalCppParams(1.0, 8.82, 0.73), 1658, rng)

# %% [markdown]
# ## Stable part
#
# For every alpha on the grid: residuals, quasi-ML (beta, sigma), and the
# squared gap between fitted density and a kernel estimate.

# %%
grid = np.round(np.arange(1.30, 2.0 + 1e-9, 0.05), 2)
res = fit_stable(bars, grid)
print(res.best)
for a, r, b, s, ok in res.r_curve[::3]:
    print(f"{a:.2f} R={r:.4g} beta={b:.3f} sigma={s:.3g}")

# %% [markdown]
# The PP distance of the fit vs. the Brownian (alpha = 2) baseline.

# %%
z = standardized_residuals(bars, res.best.alpha, res.mu_hat)
zb, fb = gaussian_baseline(bars, res.mu_hat)
print(pp_max_deviation(z, res.best.alpha, res.best.beta, res.best.sigma),
      pp_max_deviation(zb, 2.0, 0.0, fb.sigma))

# %% [markdown]
# ## Clock and copula part

# %%
sub1, sub2 = LogNormalCppParams(5.22, 8.82, 0.73), LogNormalCppParams(7.8, 8.01, 0.91)
T = 370.0
jumps = synthetic_common_jumps(ClaytonParams(1.92), sub1, sub2, T, rng)
fit = fit_copula(jumps, T)
print(len(jumps), fit)

# %% [markdown]
# Marginal KS of the fitted log-normals. Only common jumps enter here, and
# they lean toward each clock's larger jumps, so tiny p-values are expected
# even at the true parameters.

# %%
for k, (m, s) in enumerate(((fit.mu_ln1, fit.sigma_ln1), (fit.mu_ln2, fit.sigma_ln2))):
    print(k + 1, ks_test(jumps[:, k], lognormal_cdf(m, s)))
