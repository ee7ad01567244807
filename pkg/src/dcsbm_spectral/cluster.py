"""Spectral community detection with the alpha-normalized operator.

Pipeline: estimate the weights from the degrees, pick alpha, take the
eigenvectors of L_alpha isolated from the bulk, premultiply them by
D^(alpha-1) and cluster the rows with a Gaussian mixture fitted by EM.
The Bethe Hessian baseline and the overlap score live here as well.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment
from scipy.sparse.linalg import eigsh
from scipy.special import logsumexp

from .errors import (EmDegenerate, EmptyClass, InvalidParams, KMismatch,
                     NoIsolatedEigenvalue)
from .graph import estimate_weights
from .operators import bethe_hessian, bh_r_c, build_l_alpha
from .rmt import alpha_opt, solve_fixed_point, support_edge, theta
from .theory import stats_at, two_class_vector

__all__ = ["SpectralEmbedding", "MixtureModel", "ClusterResult",
           "extreme_eigenpairs", "isolated_eigenvectors", "regularize", "em_fit",
           "empirical_class_stats", "detect", "overlap", "correct_rate",
           "confusion_matrix", "best_permutation"]

KAPPA = 0.02
SPURIOUS_TOL = 0.1


@dataclass
class SpectralEmbedding:
    alpha: float
    eigenvalues: np.ndarray
    raw_vectors: np.ndarray
    regularized: np.ndarray | None = None

    @property
    def W(self):
        return self.raw_vectors if self.regularized is None else self.regularized

    @property
    def dim(self):
        return self.eigenvalues.size


@dataclass
class MixtureModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    responsibilities: np.ndarray
    loglik_trace: list
    converged: bool

    @property
    def labels(self):
        return np.argmax(self.responsibilities, axis=1)

    @property
    def loglik(self):
        return self.loglik_trace[-1]


@dataclass
class ClusterResult:
    """Labels are 0-based class indices."""
    labels: np.ndarray
    method: str
    alpha: float | None
    below_transition: bool = False
    overlap: float | None = None
    embedding: SpectralEmbedding | None = None
    model: MixtureModel | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def counts(self):
        return np.bincount(self.labels, minlength=int(self.labels.max()) + 1)


# ---------------------------------------------------------------------------
# eigenvectors
# ---------------------------------------------------------------------------

def extreme_eigenpairs(mat, k, solver="auto"):
    """k eigenpairs of largest modulus, sorted by decreasing modulus.

    "lanczos" uses ARPACK with a fixed start vector (deterministic);
    "dense" a full symmetric eigensolve.
    """
    n = mat.shape[0]
    if solver == "auto":
        solver = "dense" if n <= 600 or k >= n // 4 else "lanczos"
    if solver == "dense":
        w, V = eigh(mat)
    elif solver == "lanczos":
        v0 = np.random.default_rng(12345).standard_normal(n)
        w, V = eigsh(mat, k=k, which="LM", tol=1e-8, v0=v0)
    else:
        raise InvalidParams(f"unknown solver {solver!r}")
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    return w[order], V[:, order]


def _fix_signs(V):
    for j in range(V.shape[1]):
        if V[np.argmax(np.abs(V[:, j])), j] < 0:
            V[:, j] = -V[:, j]
    return V


def isolated_eigenvectors(op, edge, K, measure=None, kappa=KAPPA,
                          spurious_tol=SPURIOUS_TOL, solver="auto"):
    """Eigenpairs of ``op`` outside [-S(1+kappa), S(1+kappa)].

    With ``measure`` given, eigenvalues whose |1 + theta(lambda)| is below
    ``spurious_tol`` are discarded as non-informative.  At most K-1 are kept,
    by decreasing modulus.  Raises NoIsolatedEigenvalue when none remains.
    """
    mat = np.asarray(op.entries)
    n = mat.shape[0]
    cut = edge.s_plus * (1 + kappa)
    k = min(n - 1, K + 1)
    while True:
        w, V = extreme_eigenpairs(mat, k, solver)
        if np.abs(w[-1]) <= cut or k >= n - 1 or solver == "dense" or w.size == n:
            break
        k = min(n - 1, 2 * k)
    out = np.abs(w) > cut
    w, V = w[out], V[:, out]
    if measure is not None and w.size:
        keep = np.ones(w.size, bool)
        for i, lam in enumerate(w):
            sol = solve_fixed_point(measure, edge.alpha, float(lam))
            if sol.converged:
                keep[i] = abs(1 + theta(measure, edge.alpha, sol)) >= spurious_tol
        w, V = w[keep], V[:, keep]
    w, V = w[:K - 1], V[:, :K - 1]
    if w.size == 0:
        raise NoIsolatedEigenvalue(
            f"no eigenvalue beyond {cut:.4g}; the graph looks below the detectability threshold")
    return SpectralEmbedding(edge.alpha, w, _fix_signs(V.copy()))


def regularize(embedding, degrees, alpha):
    """Columns D^(alpha-1) u normalized to unit length."""
    U = embedding.raw_vectors * (np.asarray(degrees, float) ** (alpha - 1))[:, None]
    U /= np.linalg.norm(U, axis=0)
    embedding.regularized = U
    return embedding


# ---------------------------------------------------------------------------
# Gaussian mixture EM
# ---------------------------------------------------------------------------

def _log_gauss(X, mean, cov):
    L = np.linalg.cholesky(cov)
    dx = np.linalg.solve(L, (X - mean).T)
    logdet = 2 * np.log(np.diag(L)).sum()
    return -0.5 * (dx * dx).sum(axis=0) - 0.5 * (logdet + X.shape[1] * np.log(2 * np.pi))


def _e_step(X, w, mu, cov):
    lp = np.column_stack([np.log(w[a]) + _log_gauss(X, mu[a], cov[a])
                          for a in range(w.size)])
    norm = logsumexp(lp, axis=1)
    return np.exp(lp - norm[:, None]), float(norm.sum())


def _m_step(X, R, floor):
    Nk = R.sum(axis=0)
    w = Nk / X.shape[0]
    mu = (R.T @ X) / Nk[:, None]
    d = X.shape[1]
    cov = np.empty((w.size, d, d))
    for a in range(w.size):
        dx = X - mu[a]
        cov[a] = (R[:, a, None] * dx).T @ dx / Nk[a]
        cov[a] = 0.5 * (cov[a] + cov[a].T) + floor * np.eye(d)
    return w, mu, cov


def _run_em(X, w, mu, cov, floor, max_iter, tol):
    n = X.shape[0]
    R, ll = _e_step(X, w, mu, cov)
    trace = [ll]
    converged = False
    for _ in range(max_iter):
        w, mu, cov = _m_step(X, R, floor)
        if w.min() < 1 / (10 * n):
            raise EmDegenerate("a mixture component collapsed")
        R, ll = _e_step(X, w, mu, cov)
        trace.append(ll)
        if abs(trace[-1] - trace[-2]) < tol * abs(trace[-1]):
            converged = True
            break
    return MixtureModel(w, mu, cov, R, trace, converged)


def _kmeanspp(X, K, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, K):
        p = d2 / d2.sum() if d2.sum() > 0 else np.full(n, 1 / n)
        centers.append(X[rng.choice(n, p=p)])
        d2 = np.minimum(d2, ((X - centers[-1]) ** 2).sum(axis=1))
    return np.array(centers)


def _hard(labels, K):
    R = np.zeros((labels.size, K))
    R[np.arange(labels.size), labels] = 1.0
    return R


def em_fit(W, K, init="random", seed=0, restarts=10, max_iter=1000, tol=1e-9,
           means=None, covariances=None, weights=None, labels=None,
           seeding="kmeans"):
    """Full-covariance Gaussian mixture EM on the rows of ``W``.

    init="random": best log-likelihood of ``restarts`` runs, each seeded by
    a k-means partition started from k-means++ centres (``seeding="kmeans"``),
    by the k-means++ centres and one hard assignment (``seeding="kmeans++"``) or by
    means drawn uniformly in the bounding box of the data, the data
    covariance for every class and equal weights (``seeding="uniform"``).
    init="theory": start from the given ``means`` (K x l), ``covariances``
    (K x l x l) and ``weights``.  init="oracle":
    start from the empirical statistics of ``labels``.
    """
    X = np.asarray(W, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if d < 1 or K < 1:
        raise InvalidParams("need at least one column and one class")
    data_cov = np.atleast_2d(np.cov(X.T, bias=True))
    floor = max(1e-10 * np.trace(data_cov) / d, 1e-300)
    rng = np.random.default_rng(seed)

    def jittered(w, mu, cov):
        scale = np.sqrt(np.diag(data_cov))
        return w, mu + 1e-3 * scale * rng.standard_normal(mu.shape), cov

    if init == "random":
        best = None
        fails = 0
        runs = 0
        while runs < restarts:
            try:
                if seeding in ("kmeans", "kmeans++"):
                    C = _kmeanspp(X, K, rng)
                    if seeding == "kmeans":
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore")
                            C, _ = kmeans2(X, C, iter=100, minit="matrix")
                    lab = np.argmin(((X[:, None, :] - C[None]) ** 2).sum(axis=2), axis=1)
                    R = _hard(lab, K) + 1e-6
                    R /= R.sum(axis=1, keepdims=True)
                    w, mu, cov = _m_step(X, R, floor)
                elif seeding == "uniform":
                    mu = rng.uniform(X.min(axis=0), X.max(axis=0), size=(K, d))
                    cov = np.repeat(data_cov[None] + floor * np.eye(d), K, axis=0)
                    w = np.full(K, 1 / K)
                else:
                    raise InvalidParams(f"unknown seeding {seeding!r}")
                m = _run_em(X, w, mu, cov, floor, max_iter, tol)
            except (EmDegenerate, np.linalg.LinAlgError):
                fails += 1
                if fails > 5 * restarts:
                    raise EmDegenerate("EM collapsed on every restart") from None
                continue
            runs += 1
            if best is None or m.loglik > best.loglik:
                best = m
        return best

    if init == "oracle":
        if labels is None:
            raise InvalidParams("oracle init needs labels")
        labels = np.asarray(labels)
        if labels.size != n:
            raise KMismatch("labels and W disagree in length")
        w, mu, cov = _m_step(X, _hard(labels, K), floor)
    elif init == "theory":
        if means is None or covariances is None:
            raise InvalidParams("theory init needs means and covariances")
        mu = np.asarray(means, float).reshape(K, d)
        cov = np.asarray(covariances, float).reshape(K, d, d) + floor * np.eye(d)
        w = np.full(K, 1 / K) if weights is None else np.asarray(weights, float)
    else:
        raise InvalidParams(f"unknown init {init!r}")
    for attempt in range(restarts + 1):
        try:
            return _run_em(X, w, mu, cov, floor, max_iter, tol)
        except (EmDegenerate, np.linalg.LinAlgError):
            w, mu, cov = jittered(w, mu, cov)
    raise EmDegenerate("EM collapsed after jittered restarts")


def empirical_class_stats(W, labels, K=None):
    """Per-class means (K x l) and covariances (K x l x l), normalized by n_a."""
    X = np.asarray(W, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    K = int(labels.max()) + 1 if K is None else K
    means = np.zeros((K, X.shape[1]))
    covs = np.zeros((K, X.shape[1], X.shape[1]))
    for a in range(K):
        Xa = X[labels == a]
        if Xa.shape[0] == 0:
            raise EmptyClass(f"class {a} is empty")
        means[a] = Xa.mean(axis=0)
        dx = Xa - means[a]
        covs[a] = dx.T @ dx / Xa.shape[0]
    return means, covs


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------

def confusion_matrix(true_labels, pred_labels, K):
    t = np.asarray(true_labels)
    p = np.asarray(pred_labels)
    if t.shape != p.shape:
        raise KMismatch("label vectors differ in length")
    if t.size and (t.max() >= K or p.max() >= K or t.min() < 0 or p.min() < 0):
        raise KMismatch(f"labels outside 0..{K - 1}")
    C = np.zeros((K, K), dtype=int)
    np.add.at(C, (t, p), 1)
    return C


def best_permutation(true_labels, pred_labels, K):
    """perm with perm[pred] best matching true (assignment on the confusion
    matrix)."""
    C = confusion_matrix(true_labels, pred_labels, K)
    rows, cols = linear_sum_assignment(-C)
    perm = np.empty(K, dtype=int)
    perm[cols] = rows
    return perm, C[rows, cols].sum()


def correct_rate(true_labels, pred_labels, K):
    """Fraction of nodes correctly labelled, best over label permutations."""
    _, hits = best_permutation(true_labels, pred_labels, K)
    return hits / len(true_labels)


def overlap(true_labels, pred_labels, K):
    """(matching fraction - 1/K) / (1 - 1/K)."""
    return (correct_rate(true_labels, pred_labels, K) - 1 / K) / (1 - 1 / K)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _cluster(W, K, clusterer, init, seed, restarts, theory_params=None, labels=None,
             seeding="kmeans"):
    if clusterer == "kmeans":
        _, lab = kmeans2(W, K, minit="++", seed=seed)
        return lab, None
    if init == "theory":
        mu, cov, w = theory_params
        # eigenvector signs are arbitrary: keep the sign pattern under which the
        # predicted mixture explains the data best, before any EM step.  Ranking
        # by the final EM likelihood instead can pick a wrong-sign start that
        # drifts to a spurious higher-likelihood mixture.
        X = np.asarray(W, dtype=float)
        floor = max(1e-10 * np.trace(np.atleast_2d(np.cov(X.T, bias=True))) / X.shape[1],
                    1e-300)
        best, best_ll = None, -np.inf
        for signs in itertools.product((1.0, -1.0), repeat=X.shape[1]):
            s = np.array(signs)
            c_s = cov * np.outer(s, s) + floor * np.eye(X.shape[1])
            ll = _e_step(X, np.asarray(w, float), mu * s, c_s)[1]
            if ll > best_ll:
                best, best_ll = s, ll
        m = em_fit(W, K, "theory", seed, restarts, means=mu * best,
                   covariances=cov * np.outer(best, best), weights=w)
        return m.labels, m
    m = em_fit(W, K, init, seed, restarts, labels=labels, seeding=seeding)
    return m.labels, m


def detect(graph, K, alpha="opt", method="l_alpha", init="random", seed=0,
           c=None, V=None, clusterer="em", kappa=KAPPA, spurious_tol=SPURIOUS_TOL,
           restarts=10, bins=200, bh_radius="sqrt", solver="auto",
           true_labels=None, seeding="kmeans"):
    """Run the full detection pipeline on ``graph``.

    alpha: a number in [0, 1] or "opt" (minimizer of the estimated threshold).
    method: "l_alpha" or "bethe_hessian".
    init: "random" (see ``em_fit`` for ``restarts`` and ``seeding``),
    "theory" (needs class proportions ``c``; for K > 2 also the
    symmetrized-Mbar eigenvectors ``V``) or "oracle" (needs
    ``true_labels`` or graph labels).
    Below the detectability threshold every node goes to class 0 and
    ``below_transition`` is set.
    """
    if K < 2:
        raise InvalidParams("K must be at least 2")
    truth = true_labels if true_labels is not None else graph.labels
    if method == "bethe_hessian":
        return _detect_bh(graph, K, init, seed, clusterer, restarts, bh_radius, truth)
    if method != "l_alpha":
        raise InvalidParams(f"unknown method {method!r}")

    q_hat, mu_hat = estimate_weights(graph, bins=bins)
    diag = {}
    if alpha == "opt":
        a_hat, curve = alpha_opt(mu_hat)
        diag["alpha_hat"] = a_hat
        diag["tau_curve"] = curve
        alpha = a_hat
    alpha = float(alpha)
    op = build_l_alpha(graph, alpha)
    edge = support_edge(mu_hat, alpha)
    diag["edge"] = edge
    try:
        emb = isolated_eigenvectors(op, edge, K, mu_hat, kappa, spurious_tol, solver)
    except NoIsolatedEigenvalue:
        res = ClusterResult(np.zeros(graph.n, dtype=int), method, alpha, True,
                            diagnostics=diag)
        if truth is not None:
            res.overlap = overlap(truth, res.labels, K)
        return res
    regularize(emb, graph.degrees, alpha)
    W = emb.W
    diag["ell"] = emb.dim

    tp = None
    if init == "theory" and clusterer == "em":
        if c is None:
            raise InvalidParams("theory init needs the class proportions c")
        c = np.asarray(c, dtype=float)
        if V is None:
            if K != 2:
                raise InvalidParams("theory init for K > 2 needs the eigenvectors V")
            V = two_class_vector(c)[:, None]
        V = np.asarray(V, dtype=float).reshape(K, -1)[:, :emb.dim]
        nu, sig, _ = stats_at(mu_hat, alpha, emb.eigenvalues, V, c, graph.n)
        tp = (nu.T, np.transpose(sig, (2, 0, 1)), c)
    lab, model = _cluster(W, K, clusterer, init, seed, restarts, tp, truth, seeding)
    res = ClusterResult(lab, method, alpha, False, embedding=emb, model=model,
                        diagnostics=diag)
    if truth is not None:
        res.overlap = overlap(truth, lab, K)
    return res


def _negative_eigvecs(H, max_k):
    n = H.shape[0]
    if n <= 600:
        w, V = eigh(H)
        neg = w < 0
        return w[neg], V[:, neg]
    k = min(max_k, n - 2)
    v0 = np.random.default_rng(12345).standard_normal(n)
    while True:
        w, V = eigsh(H, k=k, which="SA", tol=1e-8, v0=v0)
        if w.max() >= 0 or k >= n - 2:
            break
        k = min(2 * k, n - 2)
    neg = w < 0
    return w[neg], V[:, neg]


def _detect_bh(graph, K, init, seed, clusterer, restarts, bh_radius, truth):
    r = bh_r_c(graph)
    if bh_radius == "sqrt":
        r = np.sqrt(max(r, 0.0))
    elif bh_radius != "literal":
        raise InvalidParams(f"unknown bh_radius {bh_radius!r}")
    cols, vals = [], []
    for rr in (r, -r):
        H = bethe_hessian(graph, rr).entries
        w, V = _negative_eigvecs(H, K + 2)
        vals.append(w)
        cols.append(V)
    W = np.hstack(cols)
    diag = {"r": r, "negative_eigs": np.concatenate(vals)}
    if W.shape[1] == 0:
        res = ClusterResult(np.zeros(graph.n, dtype=int), "bethe_hessian", None, True,
                            diagnostics=diag)
    else:
        W = _fix_signs(W)
        emb = SpectralEmbedding(float("nan"), np.concatenate(vals), W)
        lab, model = _cluster(W, K, clusterer, "oracle" if init == "oracle" else "random",
                              seed, restarts, labels=truth)
        res = ClusterResult(lab, "bethe_hessian", None, False, embedding=emb,
                            model=model, diagnostics=diag)
    if truth is not None:
        res.overlap = overlap(truth, res.labels, K)
    return res
