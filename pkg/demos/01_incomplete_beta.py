# %% [markdown]
# # Incomplete beta and its inverse
#
# Credible intervals for an age group's share are quantiles of a Beta law.
# Shapes reach ~1e5 at municipal scale, so everything runs in log space.

# %%
import numpy as np
from scipy import special as sc

from demofuse.special import betainc, betaincinv, log_beta

# %%
# CDF at a few points, next to scipy's implementation
x = np.array([0.01, 0.2, 0.5, 0.9])
print(betainc(x, 2.0, 5.0))
print(sc.betainc(2.0, 5.0, x))

# %%
# quantiles round-trip through the CDF
p = np.array([1e-6, 0.025, 0.5, 0.975, 1 - 1e-6])
for a, b in [(0.5, 0.5), (50, 2), (3.1e4, 1.1e5)]:
    q = betaincinv(p, a, b)
    print(f"Beta({a:g}, {b:g})  max |F(q) - p| = {np.abs(betainc(q, a, b) - p).max():.1e}")

# %%
# Beta(1, 1) is uniform: the 95% interval is exactly (0.025, 0.975)
print(betaincinv(np.array([0.025, 0.975]), 1.0, 1.0))

# %%
# log B(a, b) keeps full accuracy where summed log-gammas drift
a, b = 1.47e5, 1.32
print(log_beta(a, b), sc.gammaln(a) + sc.gammaln(b) - sc.gammaln(a + b))

# %%
# Limits of binary64: Beta(1e4, 0.5) piles its upper tail into the last few
# doubles below 1. At p = 1 - 1e-6 the exact quantile lies between
# 1 - 2**-53 and 1, so no double reproduces p to 1e-9.
q = betaincinv(1 - 1e-6, 1e4, 0.5)
print(q, 1 - q, abs(betainc(q, 1e4, 0.5) - (1 - 1e-6)))
