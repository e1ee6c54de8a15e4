# %% [markdown]
# # Comparing methods against a census
#
# APD = 100 |estimate - census| / census per (age group, sex) cell, averaged
# by age group and by sex.

# %%
import numpy as np

from demofuse.evaluation import MethodEstimates, build_report
from demofuse.model import AgeSexTable

rng = np.random.default_rng(3)
census = rng.integers(300, 1500, (17, 2)).astype(float)
methods = [
    MethodEstimates("close", AgeSexTable(census * rng.normal(1.0, 0.04, (17, 2)))),
    MethodEstimates("biased", AgeSexTable(census * 1.12)),
]
report = build_report(methods, AgeSexTable(census))

# %%
for r in report.sex_rows():
    print(r)

# %%
for r in report.age_rows()[:6]:
    print(r)

# %%
# the "sexes" rule averages the two sex means instead of all cells
build_report(methods, AgeSexTable(census), total_rule="sexes").by_sex()
