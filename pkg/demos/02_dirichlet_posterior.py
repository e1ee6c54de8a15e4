# %% [markdown]
# # Conjugate Dirichlet posterior for age shares
#
# Register counts q by age group update a Dirichlet prior alpha into
# alpha* = q + alpha. Shares and their marginal intervals follow in closed form.

# %%
import numpy as np

from demofuse.posterior import (
    count_estimates, log_density, marginal_interval, posterior_mean, posterior_update, sample,
)

# %%
q = np.array([410, 520, 495, 388, 301])          # register counts, 5 groups
alpha = np.array([450.0, 500.0, 480.0, 420.0, 330.0])  # projection as pseudo-counts
post = posterior_update(q, alpha)
post.alpha_star, post.A_star

# %%
theta_hat = posterior_mean(post)
lo, hi = marginal_interval(post, np.arange(post.size), 0.95)
for l in range(post.size):
    print(f"group {l}: {theta_hat[l]:.4f}  [{lo[l]:.4f}, {hi[l]:.4f}]")

# %%
# on the count scale, scaled by the register total
est = count_estimates(post, q.sum(), 0.95)
print(np.round(est.point, 1), np.round(est.lower, 1), np.round(est.upper, 1))

# %%
# density at the posterior mean
log_density(theta_hat, post)

# %%
# Monte Carlo check of the closed forms
draws = sample(post, 200_000, seed=1)
print(draws.mean(axis=0) - theta_hat)
print(np.quantile(draws, [0.025, 0.975], axis=0) - np.vstack([lo, hi]))
