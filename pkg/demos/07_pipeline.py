# %% [markdown]
# # The whole pipeline on the shipped synthetic area
#
# Equivalent shell session:
#
#     demofuse pipeline --config fixtures/synthetic/config.yaml --out /tmp/run

# %%
import tempfile
from pathlib import Path

from demofuse.cli import main

config = Path(__file__).resolve().parents[1] / "fixtures" / "synthetic" / "config.yaml"
out = Path(tempfile.mkdtemp(prefix="demofuse-"))
assert main(["pipeline", "--config", str(config), "--out", str(out), "-q"]) == 0
sorted(p.name for p in out.iterdir())

# %%
print((out / "linkage_summary.csv").read_text())
print((out / "apd_by_sex.csv").read_text())

# %%
print((out / "pyramid.txt").read_text().split("\n\n")[2])
