"""Two classes: predicted eigenvector statistics vs one sampled graph.

The regularized spike eigenvector is approximately Gaussian within each
class; its predicted means and variances give a theoretical correct rate.
"""
# %%
import numpy as np

from dcsbm_spectral import presets
from dcsbm_spectral.cluster import (correct_rate, detect, empirical_class_stats,
                                    isolated_eigenvectors, regularize)
from dcsbm_spectral.graph import estimate_weights, sample_dcsbm
from dcsbm_spectral.operators import build_l_alpha
from dcsbm_spectral.rmt import support_edge
from dcsbm_spectral.theory import theory_point

alpha, delta = 0.5, 15.0
p = presets.params("fig8", delta)
mu = p.weight_law.measure()
c = p.proportions

# %%
pt = theory_point(mu, alpha, delta * np.eye(2), c, p.n, weighting="equal")
print("predicted means     ", np.round(pt["nu"], 5))
print("predicted variances ", pt["sigma"])
print(f"predicted correct rate (equal class weights) {pt['rate']:.4f}")

# %%
g, lat = sample_dcsbm(p, seed=0)
edge = support_edge(estimate_weights(g)[1], alpha)
emb = regularize(isolated_eigenvectors(build_l_alpha(g, alpha), edge, 2), g.degrees, alpha)
m, v = empirical_class_stats(emb.W, lat.labels, 2)
sign = np.sign(m.ravel() @ pt["nu"])
print("empirical means     ", np.round(sign * m.ravel(), 5))
print("empirical variances ", v.ravel())

# %%
for init in ("random", "theory", "oracle"):
    res = detect(g, 2, alpha=alpha, init=init, c=c)
    print(f"EM init={init:7s} correct rate {correct_rate(lat.labels, res.labels, 2):.4f}")
