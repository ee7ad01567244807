"""Limiting statistics of the regularized spike eigenvectors.

For an informative spike rho with symmetrized eigenvector v, the entries of
the regularized eigenvector D^(alpha-1) u (unit norm) restricted to class a
are asymptotically Gaussian with mean nu^a and variance sigma^a given in
closed form through the e-moments at rho and a correction chi(rho).  For
K = 2 these feed a Gaussian decision rule and a theoretical correct rate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import (DegenerateDenominator, DegenerateVariance, InvalidParams,
                     NotInformative)
from .rmt import (alpha_opt, e_moment, e_moment2, e_moment3, predict_spikes,
                  solve_fixed_point, support_edge)

__all__ = ["TheoryStats", "DecisionRule", "chi", "chi_single_atom",
           "limiting_means", "limiting_covariances", "theory_stats",
           "decision_rule", "theory_point", "theory_curve", "Q", "stats_at",
           "two_class_vector"]


def Q(x):
    """Lower-tail standard Gaussian integral, int_{-inf}^x phi."""
    return ndtr(x)


@dataclass
class TheoryStats:
    """nu[i, a], sigma[i, j, a] and chi[i] for the informative spikes."""
    alpha: float
    spike_idx: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray
    chi: np.ndarray
    spikes: object


@dataclass(frozen=True)
class DecisionRule:
    """Bayes rule between two 1-D Gaussians.

    ``inner`` is the class whose region lies between the two thresholds
    (None for a single threshold, where class 1 is left of it).
    """
    thresholds: tuple
    error_prob: float
    inner: int | None = None

    @property
    def correct_rate(self):
        return 1.0 - self.error_prob


# ---------------------------------------------------------------------------
# chi and the moments
# ---------------------------------------------------------------------------

def chi(measure, alpha, sol, printed=False):
    """Eigenvector-fluctuation correction chi(rho).

    Single-argument e_{ab;2}, e_{ab;3} are evaluated on the diagonal
    (rho, rho).  The second bracket of the numerator uses e_{32;2}, which is
    what the underlying rank-two inversion produces and what makes the
    homogeneous closed form agree; ``printed=True`` uses e_{22;2} there
    instead, for comparison only.
    """
    def e2(a, b):
        return e_moment2(measure, alpha, a, b, sol, sol)

    def e3(a, b):
        return e_moment3(measure, alpha, a, b, sol, sol)

    e42, e32, e22 = e2(4, 2), e2(3, 2), e2(2, 2)
    em10 = e_moment(measure, alpha, -1, 0, sol)
    e00 = e_moment(measure, alpha, 0, 0, sol)
    e323, e423 = e3(3, 2), e3(4, 2)
    den = (1 + e42) * (1 - e22) + e32 ** 2
    if abs(den) < 1e-12:
        raise DegenerateDenominator("chi denominator vanishes")
    second = e22 if printed else e32
    num = ((1 + e42) * em10 - e32 * e00) * e323 - (second * em10 + (1 - e22) * e00) * e423
    return num / den


def _single_atom_e1(q0, alpha, rho):
    s = q0 ** (1 - 2 * alpha) * (1 - q0 ** 2)
    r = q0 ** (1 - 2 * alpha)
    # root of s E1^2 + rho E1 + r = 0 that vanishes as rho -> +inf
    disc = np.sqrt(rho * rho - 4 * s * r)
    if rho > 0:
        return (-rho + disc) / (2 * s)
    return (-rho - disc) / (2 * s)


def chi_single_atom(q0, alpha, rho):
    """Closed-form chi for mu = delta_{q0}.

    With s = q0^(1-2a)(1-q0^2), sigma^2 = q0^(2-4a)(1-q0^2) and
    w = -rho - s E1(rho): chi = sigma^2 / (w^2 (w^2 - sigma^2)).
    Also returns e_{00;2}(rho, rho) = 1/w^2 and E1.
    """
    s = q0 ** (1 - 2 * alpha) * (1 - q0 ** 2)
    sig2 = q0 ** (2 - 4 * alpha) * (1 - q0 ** 2)
    E1 = _single_atom_e1(q0, alpha, rho)
    w = -rho - s * E1
    return sig2 / (w * w * (w * w - sig2)), 1.0 / (w * w), E1


# ---------------------------------------------------------------------------
# means and covariances
# ---------------------------------------------------------------------------

def _spike(report, i):
    if not np.isfinite(report.rho[i]) or not report.informative[i]:
        raise NotInformative(f"eigenvalue {i} has no informative spike")
    lam = report.mbar_eigs
    if np.sum(np.isclose(lam, lam[i], rtol=1e-8, atol=1e-12)) > 1:
        raise InvalidParams("limiting statistics need a unit-multiplicity eigenvalue")
    return report.solutions[i], report.sym_vectors[:, i]


def _pieces(measure, alpha, sol):
    e00 = e_moment(measure, alpha, 0, 0, sol)
    e002 = e_moment2(measure, alpha, 0, 0, sol, sol)
    return e00, e002, chi(measure, alpha, sol)


def limiting_means(measure, alpha, report, i, class_sizes):
    """nu^a for spike i: (nu^a)^2 = E0^2 / (e_{00;2} + chi) * v_a^2 / n_a.

    Signs follow v (largest-magnitude component positive).
    """
    sol, v = _spike(report, i)
    n_a = np.asarray(class_sizes, dtype=float)
    e00, e002, ch = _pieces(measure, alpha, sol)
    mag = np.sqrt(e00 ** 2 / (e002 + ch) * v ** 2 / n_a)
    return np.sign(v) * mag


def limiting_covariances(measure, alpha, report, i, j, class_sizes, c):
    """sigma_ij^a for spikes i, j and every class a."""
    sol1, v1 = _spike(report, i)
    sol2, v2 = _spike(report, j)
    n_a = np.asarray(class_sizes, dtype=float)
    c = np.asarray(c, dtype=float)
    e1, e1_2, ch1 = _pieces(measure, alpha, sol1)
    e2, e2_2, ch2 = _pieces(measure, alpha, sol2)
    cross = e_moment2(measure, alpha, 0, 0, sol1, sol2)
    num = (cross - e1 * e2) * v1 * v2
    if i == j:
        num = num + c * ch1
    return num / n_a / np.sqrt((e1_2 + ch1) * (e2_2 + ch2))


def theory_stats(measure, alpha, M, c, n, report=None):
    """Means and covariances for every informative spike of (M, c)."""
    c = np.asarray(c, dtype=float)
    if report is None:
        report = predict_spikes(measure, alpha, M, c)
    idx = report.informative_idx
    for i in idx:
        _spike(report, i)
    sols = [report.solutions[i] for i in idx]
    nu, sig, ch = _stats(measure, alpha, sols, report.sym_vectors[:, idx], c, n)
    return TheoryStats(float(alpha), idx, nu, sig, ch, report)


def _stats(measure, alpha, sols, V, c, n):
    r, K = len(sols), c.size
    n_a = n * c
    pieces = [_pieces(measure, alpha, s) for s in sols]
    nu = np.zeros((r, K))
    sig = np.zeros((r, r, K))
    for i in range(r):
        e00, e002, ch = pieces[i]
        nu[i] = np.sign(V[:, i]) * np.sqrt(e00 ** 2 / (e002 + ch) * V[:, i] ** 2 / n_a)
        for j in range(r):
            e00j, e002j, chj = pieces[j]
            cross = e_moment2(measure, alpha, 0, 0, sols[i], sols[j])
            num = (cross - e00 * e00j) * V[:, i] * V[:, j]
            if i == j:
                num = num + c * ch
            sig[i, j] = num / n_a / np.sqrt((e002 + ch) * (e002j + chj))
    return nu, sig, np.array([p[2] for p in pieces])


def stats_at(measure, alpha, rhos, V, c, n):
    """Limiting means/covariances at given spike locations.

    Used to initialize EM on an observed graph: ``rhos`` are the isolated
    eigenvalues actually found, ``V`` (K x len(rhos)) the matching
    eigenvectors of the symmetrized Mbar and ``c`` the class proportions.
    Returns (nu, sigma, chi) shaped (l, K), (l, l, K), (l,).
    """
    c = np.asarray(c, dtype=float)
    V = np.asarray(V, dtype=float).reshape(c.size, -1)
    sols = []
    for rho in np.atleast_1d(rhos):
        sol = solve_fixed_point(measure, alpha, float(rho), tol=1e-13, cap=40000)
        if not sol.converged:
            raise NotInformative(f"rho={rho:g} is not outside the bulk")
        sols.append(sol)
    return _stats(measure, alpha, sols, V, c, n)


def two_class_vector(c):
    """Unit eigenvector of the symmetrized Mbar for K = 2, which does not
    depend on M: proportional to (1/sqrt(c1), -1/sqrt(c2)), signed so that
    the largest-magnitude entry is positive."""
    c = np.asarray(c, dtype=float)
    v = np.array([1 / np.sqrt(c[0]), -1 / np.sqrt(c[1])])
    v /= np.linalg.norm(v)
    return v if abs(v[0]) > abs(v[1]) else -v


# ---------------------------------------------------------------------------
# decision rule
# ---------------------------------------------------------------------------

def decision_rule(nu1, nu2, sigma1, sigma2, c1, c2):
    """Bayes classification between N(nu1, sigma1) and N(nu2, sigma2) with
    priors (c1, c2); sigma are variances.

    Classes are swapped if needed so that nu1 <= nu2.  Equal variances give
    one threshold; otherwise the log-likelihood ratio is quadratic with two
    roots and the smaller-variance class owns the interval between them.
    """
    if sigma1 <= 0 or sigma2 <= 0:
        raise DegenerateVariance("variances must be positive")
    if nu1 > nu2:
        nu1, nu2, sigma1, sigma2, c1, c2 = nu2, nu1, sigma2, sigma1, c2, c1
    s1, s2 = np.sqrt(sigma1), np.sqrt(sigma2)
    if abs(sigma1 - sigma2) <= 1e-12 * max(sigma1, sigma2):
        if nu2 - nu1 <= 1e-15 * max(s1, 1.0):
            return DecisionRule((), float(min(c1, c2)))
        x = sigma1 * np.log(c1 / c2) / (nu2 - nu1) + 0.5 * (nu1 + nu2)
        err = c1 * (1 - Q((x - nu1) / s1)) + c2 * Q((x - nu2) / s2)
        return DecisionRule((float(x),), float(err))
    # log(c1 p1 / (c2 p2)) = a x^2 + b x + k
    a = 0.5 / sigma2 - 0.5 / sigma1
    b = nu1 / sigma1 - nu2 / sigma2
    k = (nu2 ** 2 / (2 * sigma2) - nu1 ** 2 / (2 * sigma1)
         + np.log(c1 / c2) + 0.5 * np.log(sigma2 / sigma1))
    disc = b * b - 4 * a * k
    if disc <= 0:
        # one weighted density dominates everywhere
        return DecisionRule((), float(c2 if a > 0 or (a == 0 and k > 0) else c1))
    r = np.sqrt(disc)
    x1, x2 = sorted(((-b - r) / (2 * a), (-b + r) / (2 * a)))
    if sigma1 < sigma2:
        # class 1 between the roots
        err = (c1 * (Q((x1 - nu1) / s1) + 1 - Q((x2 - nu1) / s1))
               + c2 * (Q((x2 - nu2) / s2) - Q((x1 - nu2) / s2)))
        inner = 1
    else:
        err = (c2 * (Q((x1 - nu2) / s2) + 1 - Q((x2 - nu2) / s2))
               + c1 * (Q((x2 - nu1) / s1) - Q((x1 - nu1) / s1)))
        inner = 2
    return DecisionRule((float(x1), float(x2)), float(err), inner)


# ---------------------------------------------------------------------------
# K = 2 curves
# ---------------------------------------------------------------------------

def _weights(c, weighting):
    if weighting == "proportional":
        return float(c[0]), float(c[1])
    if weighting == "equal":
        return 0.5, 0.5
    raise InvalidParams(f"unknown weighting {weighting!r}")


def theory_point(measure, alpha, M, c, n, edge=None, weighting="proportional"):
    """Theoretical correct rate for K = 2.

    Means and variances use the true proportions c.  ``weighting`` sets the
    class weights of the decision rule and of the error: "proportional"
    (c1, c2) is the Bayes rate, "equal" (1/2, 1/2) weighs both classes
    alike.  Below the transition the rate is the larger weight.
    Returns a dict with rate, nu (2,), sigma (2,), rho.
    """
    c = np.asarray(c, dtype=float)
    if c.size != 2:
        raise InvalidParams("theoretical error rates are for K = 2 only")
    w1, w2 = _weights(c, weighting)
    report = predict_spikes(measure, alpha, M, c, edge)
    if report.informative_idx.size == 0:
        return {"rate": max(w1, w2), "nu": np.full(2, np.nan),
                "sigma": np.full(2, np.nan), "rho": np.nan, "rule": None}
    st = theory_stats(measure, alpha, M, c, n, report)
    nu, sig = st.nu[0], st.sigma[0, 0]
    rule = decision_rule(nu[0], nu[1], sig[0], sig[1], w1, w2)
    return {"rate": rule.correct_rate, "nu": nu, "sigma": sig,
            "rho": float(report.rho[st.spike_idx[0]]), "rule": rule}


def theory_curve(measure, alpha, c, n, deltas, weighting="proportional"):
    """Rows (delta, alpha, rate, nu1, nu2, sigma1, sigma2) for M = delta I_2.

    ``alpha="opt"`` uses the optimal alpha of ``measure``.
    """
    if isinstance(alpha, str):
        if alpha != "opt":
            raise InvalidParams(f"alpha must be a number or 'opt', got {alpha!r}")
        alpha = alpha_opt(measure)[0]
    edge = support_edge(measure, alpha)
    rows = []
    for d in deltas:
        pt = theory_point(measure, alpha, d * np.eye(2), c, n, edge, weighting)
        rows.append((float(d), float(alpha), pt["rate"], *pt["nu"], *pt["sigma"]))
    return rows
