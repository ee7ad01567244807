"""Overlap against signal strength for a few normalizations.

A small version of the CLI ``benchmark --preset fig5`` run (n = 1500, two
seeds per point) so it finishes in about a minute.
"""
# %%
import numpy as np

from dcsbm_spectral import presets
from dcsbm_spectral.cluster import detect
from dcsbm_spectral.graph import sample_dcsbm

deltas = [8, 12, 16, 24, 32]
alphas = [0.0, 0.07, 0.5, 1.0]

# %%
print("delta  " + "  ".join(f"a={a:<5g}" for a in alphas))
for d in deltas:
    row = []
    for a in alphas:
        vals = []
        for seed in range(2):
            g, lat = sample_dcsbm(presets.params("fig5", d, n=1500), seed)
            vals.append(detect(g, 3, alpha=a, seed=seed, true_labels=lat.labels).overlap)
        row.append(np.mean(vals))
    print(f"{d:5g}  " + "  ".join(f"{v:7.3f}" for v in row))
