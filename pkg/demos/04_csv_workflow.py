# %% [markdown]
# # From a CSV of daily profiles to labelled curves
#
# The input format is one header row of time points followed by one row per
# curve. Empty cells are missing and can be imputed by the column mean.
# This builds a small synthetic file of hourly counts for a year of days
# (weekday and weekend shapes, a few odd days, one missing reading) and
# runs the pipeline both from Python and through the command line.

# %%
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from funoclust.io import ingest
from funoclust.oclust import OUTLIER, run_funoclust

rng = np.random.default_rng(3)
hours = np.arange(24)
weekday = 400 + 900 * np.exp(-0.5 * ((hours - 13) / 3) ** 2) + 500 * np.exp(-0.5 * ((hours - 18) / 1.5) ** 2)
weekend = 250 + 1100 * np.exp(-0.5 * ((hours - 15) / 4) ** 2)
days = np.arange(365)
is_weekend = (days % 7) >= 5
Y = np.where(is_weekend[:, None], weekend, weekday) * rng.lognormal(0, 0.08, (365, 1))
Y = Y + rng.normal(0, 40, Y.shape)
odd = [0, 30, 200, 358]
Y[odd] = rng.uniform(Y.min(), Y.max(), (len(odd), 24))

work = Path(tempfile.mkdtemp())
lines = [",".join(map(str, hours))]
for i, row in enumerate(Y):
    cells = [f"{v:.1f}" for v in row]
    if i == 273:
        cells[2] = ""
    lines.append(",".join(cells))
(work / "daily.csv").write_text("\n".join(lines) + "\n")

# %%
curves, n_imputed = ingest(work / "daily.csv", impute_missing=True)
print(curves.values.shape, "imputed cells:", n_imputed)
res = run_funoclust(curves, G=2, F=30, n_interior=8, seed=0)
print("outliers:", sorted(res.outliers.tolist()))
kept = res.final_labels != OUTLIER
print("weekend share per cluster:",
      [round(float(is_weekend[res.final_labels == g].mean()), 2) for g in (1, 2)])

# %%
out = work / "out"
subprocess.run([sys.executable, "-m", "funoclust.cli", "--input", str(work / "daily.csv"),
                "--impute", "--clusters", "2", "--max-outliers", "30",
                "--out-dir", str(out)], check=True)
print(json.dumps(json.loads((out / "summary.json").read_text()), indent=1)[:400])
