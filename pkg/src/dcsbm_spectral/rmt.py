"""Fixed-point equations for the limiting spectrum of L_alpha.

For a weight measure mu the limiting Stieltjes transform is driven by the
pair (E1, E2) = (e_11, e_21) solving

    e_ab(z) = int q^(a - 2 b alpha) / (-z - E1 q^(1-2alpha) + E2 q^(2-2alpha)) mu(dq).

Everything spectral (bulk edge, detectability threshold, spike positions,
optimal alpha) is derived from this map.  The iteration is a damped Picard
scheme; for real z inside the bulk it does not settle, and that failure is
the signal used to locate the edge of the support.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (BracketFailure, DegenerateMoment, InvalidMeasure,
                     InvalidParams, NotConverged, RootNotBracketed)
from .graph import WeightMeasure

__all__ = [
    "StieltjesSolution", "SupportEstimate", "SpikeReport",
    "solve_fixed_point", "solve_many", "e_moment", "e_moment2", "e_moment3",
    "support_edge", "support_edges", "alpha_opt", "mbar_spectrum",
    "predict_spikes", "theta", "spike_ratio_curve",
]

GAMMA = 0.5
TOL = 1e-10
CAP = 2000
DELTA = 1e-3
EDGE_TOL = 1e-4


@dataclass(frozen=True)
class StieltjesSolution:
    z: complex | float
    alpha: float
    e1: complex | float
    e2: complex | float
    e0: complex | float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class SupportEstimate:
    alpha: float
    s_plus: float
    tau: float
    probe_offset: float

    @property
    def support(self):
        return (-self.s_plus, self.s_plus)


@dataclass
class SpikeReport:
    """Spikes predicted for the eigenvalues of Mbar = (D(c) - c c^T) M.

    Arrays are aligned with ``mbar_eigs`` (sorted by decreasing modulus);
    ``rho`` is NaN for eigenvalues below the detectability threshold.
    """
    alpha: float
    edge: SupportEstimate
    mbar_eigs: np.ndarray
    sym_vectors: np.ndarray
    rho: np.ndarray
    theta_at_rho: np.ndarray
    informative: np.ndarray
    solutions: list = field(default_factory=list)

    @property
    def isolated(self):
        """Indices of eigenvalues that produce a spike."""
        return np.flatnonzero(np.isfinite(self.rho))

    @property
    def informative_idx(self):
        return np.flatnonzero(np.isfinite(self.rho) & self.informative)


# ---------------------------------------------------------------------------
# fixed point
# ---------------------------------------------------------------------------

def _check_measure(measure):
    if not isinstance(measure, WeightMeasure) or len(measure) == 0:
        raise InvalidMeasure("a non-empty WeightMeasure is required")


def _powers(q, alpha):
    alpha = np.asarray(alpha, dtype=float)[..., None]
    return q ** (1 - 2 * alpha), q ** (2 - 2 * alpha)


def _iterate(a1, a2, p, z, gamma=GAMMA, tol=TOL, cap=CAP):
    """Damped Picard iteration for many query points at once.

    a1, a2 have shape (m, k) (one row per query), z has shape (m,).
    Rows stop as soon as their relative step drops below ``tol``; rows that
    produce non-finite values are stopped and marked as not converged.
    """
    m = z.shape[0]
    dtype = np.result_type(z.dtype, float)
    E1 = np.full(m, -1.0, dtype=dtype)
    E2 = np.full(m, -1.0, dtype=dtype)
    conv = np.zeros(m, bool)
    iters = np.full(m, cap)
    active = np.arange(m)
    b1, b2, zz = a1, a2, z
    with np.errstate(all="ignore"):
        for it in range(1, cap + 1):
            e1, e2 = E1[active], E2[active]
            den = -zz[:, None] - e1[:, None] * b1 + e2[:, None] * b2
            f1 = (b1 / den) @ p
            f2 = (b2 / den) @ p
            n1 = (1 - gamma) * e1 + gamma * f1
            n2 = (1 - gamma) * e2 + gamma * f2
            step = np.maximum(abs(n1 - e1), abs(n2 - e2))
            scale = np.maximum(np.maximum(abs(n1), abs(n2)), 1e-300)
            E1[active], E2[active] = n1, n2
            bad = ~(np.isfinite(n1) & np.isfinite(n2))
            done = (step < tol * scale) & ~bad
            stop = done | bad
            if stop.any():
                conv[active[done]] = True
                iters[active[stop]] = it
                keep = ~stop
                active = active[keep]
                if active.size == 0:
                    break
                b1, b2, zz = b1[keep], b2[keep], zz[keep]
    return E1, E2, conv, iters


def solve_many(measure, alpha, z, gamma=GAMMA, tol=TOL, cap=CAP):
    """Solve the fixed point at each query point of ``z``; ``alpha`` may be an
    array broadcast against ``z``."""
    _check_measure(measure)
    z = np.atleast_1d(np.asarray(z))
    if not np.iscomplexobj(z):
        z = z.astype(float)
    alpha_b = np.broadcast_to(np.asarray(alpha, dtype=float), z.shape)
    q, p = measure.support, measure.mass
    a1, a2 = _powers(q, alpha_b)
    E1, E2, conv, iters = _iterate(a1, a2, p, z, gamma, tol, cap)
    with np.errstate(all="ignore"):
        den = -z[:, None] - E1[:, None] * a1 + E2[:, None] * a2
        E0 = (1.0 / den) @ p
    out = []
    for i in range(z.size):
        ok = bool(conv[i]) and np.isfinite(E0[i])
        out.append(StieltjesSolution(_scalar(z[i]), float(alpha_b[i]), _scalar(E1[i]),
                                     _scalar(E2[i]), _scalar(E0[i]), ok, int(iters[i])))
    return out


def _scalar(x):
    x = x.item()
    if isinstance(x, complex) and x.imag == 0:
        return x.real
    return x


def solve_fixed_point(measure, alpha, z, gamma=GAMMA, tol=TOL, cap=CAP):
    """Solve for (E1, E2) at one point z (real, or complex with Im z > 0).

    Non-convergence within ``cap`` iterations is reported through
    ``converged=False`` rather than raised: for real z it means that z lies
    inside the bulk.
    """
    return solve_many(measure, alpha, [z], gamma, tol, cap)[0]


def fixed_point_map(measure, alpha, sol):
    """One undamped application of the map to (sol.e1, sol.e2)."""
    a1, a2 = _powers(measure.support, alpha)
    den = _den(measure, alpha, sol)
    return (a1 / den) @ measure.mass, (a2 / den) @ measure.mass


def _den(measure, alpha, sol):
    q = measure.support
    return -sol.z - sol.e1 * q ** (1 - 2 * alpha) + sol.e2 * q ** (2 - 2 * alpha)


def _need(*sols):
    for s in sols:
        if not s.converged:
            raise NotConverged(f"fixed point not converged at z={s.z!r}")


def e_moment(measure, alpha, a, b, sol):
    """e_ab(z) at the converged solution ``sol``."""
    _need(sol)
    q = measure.support
    return _scalar(np.asarray(measure.mass @ (q ** (a - 2 * b * alpha) / _den(measure, alpha, sol))))


def e_moment2(measure, alpha, a, b, sol1, sol2):
    """e_ab;2(z1, z2): one denominator per argument."""
    _need(sol1, sol2)
    q = measure.support
    den = _den(measure, alpha, sol1) * _den(measure, alpha, sol2)
    return _scalar(np.asarray(measure.mass @ (q ** (a - 2 * b * alpha) / den)))


def e_moment3(measure, alpha, a, b, sol1, sol2):
    """e_ab;3(z1, z2): first denominator squared."""
    _need(sol1, sol2)
    q = measure.support
    d1 = _den(measure, alpha, sol1)
    den = d1 * d1 * _den(measure, alpha, sol2)
    return _scalar(np.asarray(measure.mass @ (q ** (a - 2 * b * alpha) / den)))


# ---------------------------------------------------------------------------
# support edge and threshold
# ---------------------------------------------------------------------------

def _edges(measure, alphas, tol, cap, r_max=1e6):
    """Dichotomic search of the right edge for every alpha in lockstep."""
    alphas = np.asarray(alphas, dtype=float)
    m = alphas.size
    q, p = measure.support, measure.mass
    a1, a2 = _powers(q, alphas)
    lo = np.full(m, 1e-3)
    hi = np.ones(m)
    ok = _iterate(a1, a2, p, hi, cap=cap)[2]
    while not ok.all():
        bad = ~ok
        lo[bad] = hi[bad]
        hi[bad] *= 2
        if hi.max() > r_max:
            raise BracketFailure("no convergent point found below the doubling cap")
        ok[bad] = _iterate(a1[bad], a2[bad], p, hi[bad], cap=cap)[2]
    while True:
        width = hi - lo
        todo = width > tol * np.maximum(hi, 1.0)
        if not todo.any():
            break
        mid = 0.5 * (lo + hi)
        okm = _iterate(a1[todo], a2[todo], p, mid[todo], cap=cap)[2]
        idx = np.flatnonzero(todo)
        hi[idx[okm]] = mid[idx[okm]]
        lo[idx[~okm]] = mid[idx[~okm]]
    return hi


def _tau_from_edges(measure, alphas, s, delta, extrapolation):
    z = np.concatenate([s * (1 + delta), s * (1 + delta / 2)])
    a = np.concatenate([alphas, alphas])
    sols = solve_many(measure, a, z)
    m = len(alphas)
    e_far = np.array([sols[i].e2 for i in range(m)], dtype=float)
    e_near = np.array([sols[m + i].e2 for i in range(m)], dtype=float)
    if not all(s_.converged for s_ in sols):
        raise BracketFailure("fixed point undefined just right of the edge")
    if extrapolation == "sqrt":
        # E2 behaves like E2(S) + c sqrt(x - S) next to a square-root edge
        r = np.sqrt(2.0)
        e_lim = (r * e_near - e_far) / (r - 1)
    elif extrapolation == "linear":
        e_lim = 2 * e_near - e_far
    elif extrapolation == "none":
        e_lim = e_near
    else:
        raise InvalidParams(f"unknown extrapolation {extrapolation!r}")
    return -1.0 / e_lim


def support_edges(measure, alphas, delta=DELTA, tol=EDGE_TOL, cap=CAP,
                  extrapolation="sqrt"):
    """Vectorized :func:`support_edge` over an array of alphas."""
    _check_measure(measure)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    s = _edges(measure, alphas, tol, cap)
    tau = _tau_from_edges(measure, alphas, s, delta, extrapolation)
    return [SupportEstimate(float(a), float(si), float(t), delta)
            for a, si, t in zip(alphas, s, tau)]


def support_edge(measure, alpha, delta=DELTA, tol=EDGE_TOL, cap=CAP,
                 extrapolation="sqrt"):
    """Right edge S of the bulk and the threshold tau = -1/lim E2(x), x -> S+.

    The edge is the boundary between non-convergent (left) and convergent
    (right) fixed-point behaviour, bracketed from [1e-3, 1] by doubling and
    then bisected to relative precision ``tol``.  The one-sided limit is
    extrapolated from probes at S(1 + delta) and S(1 + delta/2); by default
    the extrapolation is in sqrt(x - S), which is how E2 approaches its edge
    value.  ``extrapolation="linear"`` gives the plain two-point rule.
    """
    return support_edges(measure, [alpha], delta, tol, cap, extrapolation)[0]


def alpha_opt(measure, grid=(0.0, 1.0, 0.02), refine_tol=1e-3, edge_tol=1e-7,
              **edge_kw):
    """argmin of tau^alpha over a grid, refined by successive local grids.

    Each refinement pass evaluates 21 points in lockstep around the current
    best value, shrinking the window tenfold, until the spacing is below
    ``refine_tol``.  Returns ``(alpha_hat, curve)`` where ``curve`` is a list of
    (alpha, tau) pairs on the grid.  Edge positions are located more tightly
    than the default because tau varies slowly with alpha.
    """
    lo, hi, step = grid
    if not (0 <= lo <= hi):
        raise InvalidParams("grid must satisfy 0 <= lo <= hi")
    alphas = np.round(np.arange(lo, hi + step / 2, step), 12)
    alphas = alphas[alphas <= hi + 1e-12]
    taus = np.full(alphas.size, np.nan)
    try:
        ests = support_edges(measure, alphas, tol=edge_tol, **edge_kw)
        taus = np.array([e.tau for e in ests])
    except BracketFailure:
        for i, a in enumerate(alphas):
            try:
                taus[i] = support_edges(measure, [a], tol=edge_tol, **edge_kw)[0].tau
            except BracketFailure:
                warnings.warn(f"edge search failed at alpha={a:g}; skipped", RuntimeWarning)
    good = np.isfinite(taus)
    if not good.any():
        raise BracketFailure("edge search failed on the whole grid")
    curve = [(float(a), float(t)) for a, t in zip(alphas, taus)]
    i = int(np.nanargmin(taus))
    spread = np.nanmax(taus) - np.nanmin(taus)
    # edge-search noise on tau is a few 1e-6 relative
    if spread <= 1e-5 * np.nanmin(taus):
        warnings.warn("tau curve is flat in alpha; alpha_opt is not identifiable",
                      RuntimeWarning)
        return float(alphas[i]), curve

    # zoom in with finer lockstep grids around the current argmin
    best_a, best_t = float(alphas[i]), float(taus[i])
    width = step
    while width > refine_tol:
        pts = np.linspace(max(lo, best_a - width), min(hi, best_a + width), 21)
        ests = support_edges(measure, pts, tol=edge_tol, **edge_kw)
        t = np.array([e.tau for e in ests])
        j = int(np.argmin(t))
        if t[j] < best_t:
            best_a, best_t = float(pts[j]), float(t[j])
        width = 2 * (pts[1] - pts[0])
    return best_a, curve


# ---------------------------------------------------------------------------
# spikes
# ---------------------------------------------------------------------------

def mbar_spectrum(M, c, rtol=1e-10):
    """Nonzero eigenvalues of Mbar = (D(c) - c c^T) M and the unit eigenvectors
    of its symmetrized form D(c)^(1/2) (I - 1c^T) M (I - c1^T) D(c)^(1/2).

    Both matrices share their nonzero spectrum.  Eigenvalues come sorted by
    decreasing modulus; each vector has its largest-magnitude entry positive.
    """
    M = np.asarray(M, dtype=float)
    c = np.asarray(c, dtype=float)
    K = c.size
    if M.shape != (K, K) or not np.allclose(M, M.T):
        raise InvalidParams("M must be a symmetric KxK matrix")
    if np.any(c <= 0) or abs(c.sum() - 1) > 1e-9:
        raise InvalidParams("c must be a probability vector")
    P = np.eye(K) - np.outer(c, np.ones(K))
    sq = np.sqrt(c)
    S = sq[:, None] * (P.T @ M @ P) * sq[None, :]
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    scale = max(np.abs(w).max(), 1.0)
    keep = np.abs(w) > rtol * scale
    w, V = w[keep], V[:, keep]
    order = np.argsort(-np.abs(w), kind="stable")
    w, V = w[order], V[:, order]
    for j in range(V.shape[1]):
        if V[np.argmax(np.abs(V[:, j])), j] < 0:
            V[:, j] = -V[:, j]
    return w, V


def _solve_rho(measure, alpha, lam, edge, tol=1e-12):
    """Positive root of E2(x) = -1/lam right of the edge."""
    target = -1.0 / lam
    s = edge.s_plus

    def f(x):
        sol = solve_fixed_point(measure, alpha, x, tol=tol, cap=20 * CAP)
        if not sol.converged:
            return -np.inf
        return sol.e2 - target

    hi = s + 10 * max(1.0, lam)
    while f(hi) < 0:
        hi *= 2
        if hi > 1e8:
            raise RootNotBracketed("upper bracket not found")
    probe = None
    for off in (edge.probe_offset, 1e-4, 1e-5, 1e-6):
        lo = s * (1 + off)
        v = f(lo)
        if v < 0:
            return brentq(f, lo, hi, xtol=1e-13 * hi, rtol=1e-13)
        if np.isfinite(v):
            probe = (lo, v + target)
    # lam barely above tau: the root is closer to the edge than the probes.
    # Use the same square-root model as the tau extrapolation,
    # E2(x) ~ -1/tau + b sqrt(x - s).
    if probe is None or not np.isfinite(edge.tau) or lam <= edge.tau:
        raise RootNotBracketed(
            f"E2 = -1/lambda has no root right of the edge (lambda={lam:g}, tau={edge.tau:g})")
    lo, e2_lo = probe
    b = (e2_lo + 1.0 / edge.tau) / np.sqrt(lo - s)
    if b <= 0:
        raise RootNotBracketed("E2 not increasing right of the edge")
    return s + ((1.0 / edge.tau - 1.0 / lam) / b) ** 2


def theta(measure, alpha, sol):
    """theta(z) = -1 - z e10/m + e21/(m e10) (v + z e_{0,-1})."""
    _need(sol)
    e10 = e_moment(measure, alpha, 1, 0, sol)
    if abs(e10) < 1e-12:
        raise DegenerateMoment("e_10 vanishes")
    e21 = e_moment(measure, alpha, 2, 1, sol)
    e0m1 = e_moment(measure, alpha, 0, -1, sol)
    m_mu = measure.mean
    v_mu = measure.v_alpha(alpha)
    z = sol.z
    return _scalar(np.asarray(-1 - z * e10 / m_mu + e21 / (m_mu * e10) * (v_mu + z * e0m1)))


def predict_spikes(measure, alpha, M, c, edge=None, spurious_tol=0.1):
    """Locate the isolated eigenvalues implied by (M, c) at this alpha.

    Each eigenvalue lam of Mbar with |lam| > tau yields a spike rho solving
    E2(rho) = -1/lam (negative lam mirrored through E2(-z) = -E2(z)).
    A spike is informative when |1 + theta(rho)| >= ``spurious_tol``.
    """
    if edge is None:
        edge = support_edge(measure, alpha)
    w, V = mbar_spectrum(M, c)
    r = w.size
    rho = np.full(r, np.nan)
    th = np.full(r, np.nan)
    info = np.zeros(r, bool)
    sols = [None] * r
    for i, lam in enumerate(w):
        if abs(lam) <= edge.tau:
            continue
        x = _solve_rho(measure, alpha, abs(lam), edge)
        x = x if lam > 0 else -x
        sol = solve_fixed_point(measure, alpha, x, tol=1e-13, cap=20 * CAP)
        rho[i] = x
        sols[i] = sol
        th[i] = theta(measure, alpha, sol)
        info[i] = abs(1 + th[i]) >= spurious_tol
    return SpikeReport(float(alpha), edge, w, V, rho, th, info, sols)


def spike_ratio_curve(measure, alpha, c, deltas, edge=None):
    """rho_max / S for M = delta * I over a range of deltas (NaN below the
    threshold).  Returns an array aligned with ``deltas``."""
    if edge is None:
        edge = support_edge(measure, alpha)
    c = np.asarray(c, dtype=float)
    out = []
    for d in deltas:
        rep = predict_spikes(measure, alpha, d * np.eye(c.size), c, edge)
        r = np.abs(rep.rho[np.isfinite(rep.rho)])
        out.append(r.max() / edge.s_plus if r.size else np.nan)
    return np.array(out)
