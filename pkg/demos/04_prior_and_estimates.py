# %% [markdown]
# # From a projection to posterior counts
#
# One step of the compensation equation, expert adjustments, then the
# per-sex conjugate update against register counts.

# %%
import numpy as np

from demofuse.model import DEFAULT_SCHEME, SEXES, AgeSexTable, Sex
from demofuse.posterior import count_estimates, posterior_update
from demofuse.prior import Adjustment, ProjectionInputs, build_prior, cohort_component_step

rng = np.random.default_rng(0)
L = DEFAULT_SCHEME.size
base = AgeSexTable(rng.integers(200, 600, (L, 2)))
births = np.zeros((L, 2))
births[0] = [55, 52]
deaths = rng.integers(0, 8, (L, 2))
imm = rng.integers(0, 15, (L, 2))
emi = rng.integers(0, 25, (L, 2))

# %%
step = cohort_component_step(ProjectionInputs(base, births, deaths, imm, emi))
step.table.counts[:4], step.clamped

# %%
# an analyst distrusts the 20-24 male cell and halves the projection's weight overall
prior = build_prior(step.table, [Adjustment(4, Sex.MALE, multiplier=0.8)], scale=0.5)
prior.alpha[:6], prior.provenance[:6]

# %%
register = rng.integers(150, 550, (L, 2))
for j, sex in enumerate(SEXES):
    post = posterior_update(register[:, j], prior.alpha[:, j])
    c = count_estimates(post, register[:, j].sum(), 0.95)
    print(sex.value)
    for lab, p, lo, hi in list(zip(DEFAULT_SCHEME.labels, c.point, c.lower, c.upper))[:5]:
        print(f"  {lab:>6} {p:8.1f} [{lo:8.1f}, {hi:8.1f}]")
