# %% [markdown]
# # Do 95% intervals cover 95% of the time?
#
# Draw the truth from the prior, draw register counts from it, update, and
# check every age group's interval. Repeat 1000 times.

# %%
import numpy as np

from demofuse.synth import coverage_study

alpha = np.column_stack([np.linspace(400, 60, 17), np.linspace(380, 80, 17)])
res = coverage_study(alpha, (50_000, 50_000), replicates=1000, level=0.95, seed=1)
for row in res.rows()[:6]:
    print(row)
print("range:", res.coverage.min(), res.coverage.max())

# %%
# at level 0.5 coverage sits near one half
coverage_study(alpha, (50_000, 50_000), replicates=1000, level=0.5, seed=2).coverage.mean()
