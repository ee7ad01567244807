"""Parameter sets of the reference experiments (Figs. 5-9 analogs).

Each preset fixes the model and the swept variable; ``params(preset, x)``
builds the DcsbmParams at one value of the sweep.
"""
import numpy as np

from .graph import DcsbmParams, WeightLaw, parse_weight_law

PRESETS = {
    # overlap vs delta, M = delta * I3
    "fig5": dict(n=3000, c=[1 / 3] * 3, law="0.75@0.1,0.25@0.5", x="delta",
                 grid=list(np.arange(5, 51, 2.5)), value="overlap",
                 methods=["a0", "a0.5", "a1", "aopt"]),
    # overlap vs the second weight q2, M_ii = 10, M_ij = -10
    "fig6": dict(n=3000, c=[1 / 3] * 3, law=None, x="q2",
                 grid=list(np.round(np.arange(0.1, 0.91, 0.1), 10)), value="overlap",
                 methods=["a0", "a0.5", "a1", "aopt", "bh"]),
    # overlap vs delta, power-law weights
    "fig7": dict(n=3000, c=[1 / 3] * 3, law="powerlaw:3:0.05:0.3", x="delta",
                 grid=list(np.arange(10, 151, 10)), value="overlap",
                 methods=["a0", "a0.5", "a1", "aopt", "bh"]),
    # correct rate vs delta, K = 2, alpha = 1/2, three EM initializations
    "fig8": dict(n=4000, c=[0.8, 0.2], law="0.75@0.2,0.25@0.8", x="delta",
                 grid=list(np.arange(1, 20.5, 1.0)), value="correct_rate", alpha=0.5,
                 methods=["random", "random1", "theory", "oracle"]),
    # theoretical correct rate only, uniform weights on [0.2, 0.8]
    "fig9": dict(n=4000, c=[0.8, 0.2], law="powerlaw:0:0.2:0.8", x="delta",
                 grid=list(np.arange(0.5, 20.01, 0.5)), value="theory_rate",
                 alphas=[0.0, 0.25, 0.5, 0.75, 1.0, "opt"]),
}


def weight_law(preset, x=None):
    if preset == "fig6":
        # q2 = 0.1 collapses to a single atom
        if np.isclose(float(x), 0.1):
            return WeightLaw.point(0.1)
        return WeightLaw.discrete([(0.1, 0.75), (float(x), 0.25)])
    return parse_weight_law(PRESETS[preset]["law"])


def affinity(preset, x):
    K = len(PRESETS[preset]["c"])
    if preset == "fig6":
        return 20.0 * np.eye(K) - 10.0
    return float(x) * np.eye(K)


def params(preset, x, n=None):
    p = PRESETS[preset]
    c = np.array(p["c"], dtype=float)
    return DcsbmParams(int(n or p["n"]), c.size, c, affinity(preset, x),
                       weight_law(preset, x))
