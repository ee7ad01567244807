"""Bulk spectrum of L_alpha on a graph with no communities.

Samples a DCSBM with M = 0 and compares the eigenvalue histogram with the
edge predicted by the fixed-point equations.  Run with ``python3 demos/01_bulk_edge.py``.
"""
# %%
import numpy as np

from dcsbm_spectral import presets
from dcsbm_spectral.graph import estimate_weights, sample_dcsbm
from dcsbm_spectral.operators import build_l_alpha
from dcsbm_spectral.rmt import support_edge

g, latent = sample_dcsbm(presets.params("fig5", 0.0, n=2000), seed=0)
q_hat, mu_hat = estimate_weights(g)
print(f"n={g.n}, mean degree {g.degrees.mean():.1f}")

# %%
# edge from the true weights and from the degrees alone
for alpha in (0.0, 0.5, 1.0):
    lam = np.linalg.eigvalsh(build_l_alpha(g, alpha).entries)
    s_true = support_edge(latent.params.weight_law.measure(), alpha).s_plus
    s_hat = support_edge(mu_hat, alpha).s_plus
    print(f"alpha={alpha:.1f}  max|lambda|={np.abs(lam).max():.4f}  "
          f"S(mu)={s_true:.4f}  S(mu_hat)={s_hat:.4f}")

# %%
# text histogram of the positive half at alpha = 1/2, then the predicted edge
lam = np.linalg.eigvalsh(build_l_alpha(g, 0.5).entries)
s = support_edge(mu_hat, 0.5).s_plus
counts, bins = np.histogram(lam[lam > 0], bins=20, range=(0, 1.1 * s))
for c, lo in zip(counts, bins[:-1]):
    print(f"{lo:.3f} {'#' * int(60 * c / counts.max())}")
print(f"predicted edge {s:.3f}")
