"""Detectability threshold as a function of alpha.

tau(alpha) is the smallest eigenvalue of Mbar that still produces an
isolated eigenvalue.  Its minimizer alpha_opt is the normalization that
detects communities at the weakest signal.
"""
# %%
import numpy as np

from dcsbm_spectral.graph import WeightLaw, parse_weight_law
from dcsbm_spectral.rmt import alpha_opt, support_edge

laws = {
    "two atoms 0.1/0.5": parse_weight_law("0.75@0.1,0.25@0.5").measure(),
    "power law q^-3 on [0.05, 0.3]": WeightLaw.powerlaw(3, 0.05, 0.3).measure(),
}

# %%
for name, mu in laws.items():
    a, curve = alpha_opt(mu)
    tau = dict(curve)
    t_opt = support_edge(mu, a, tol=1e-7).tau
    print(f"{name}: alpha_opt={a:.3f}, tau(alpha_opt)={t_opt:.4f}")
    for x in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        print(f"    tau({x:.2f}) = {tau[x]:.4f}")
    # with M = delta I_3 and equal classes, Mbar has eigenvalue delta / 3
    print(f"    predicted transition delta_c = {3 * t_opt:.2f}")
