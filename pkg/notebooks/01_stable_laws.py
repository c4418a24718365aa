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
# # Stable laws
#
# The density and sampler of S_alpha(sigma, beta, mu),
# checked against each other.

# %%
import numpy as np

from stablesub.calibration import ks_test
from stablesub.stable import StableCdf, StableParams, char_exponent, density, sample

rng = np.random.default_rng(1)
p = StableParams(alpha=1.62, beta=0.09)

# %% [markdown]
# The density comes from a one-dimensional integral. At the origin of a
# symmetric law it has a closed form, Gamma(1 + 1/alpha) / pi.

# %%
x = np.linspace(-6, 6, 7)
print(np.c_[x, density(p, x)])

# %% [markdown]
# Heavy tails: the log-log slope of the density approaches -(1 + alpha).

# %%
far = np.array([1e2, 1e3, 1e4])
print(np.diff(np.log(density(p, far))) / np.diff(np.log(far)))

# %% [markdown]
# ## Sampler vs. distribution function

# %%
draws = sample(p, 100_000, rng)
print(ks_test(draws, StableCdf(p)))

# %% [markdown]
# Empirical characteristic function against exp(phi(u)).

# %%
for u in (0.3, 1.0, 2.5):
    print(u, np.mean(np.exp(1j * u * draws)), np.exp(char_exponent(p, u)))
