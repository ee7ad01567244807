"""Dense operators whose spectra drive detection.

L_alpha = (2m)^alpha n^(-1/2) D^(-alpha) (A - d d^T / 2m) D^(-alpha)

plus its random equivalent (test oracle for generated graphs) and the Bethe
Hessian H(r) = (r^2 - 1) I - r A + D used as a baseline.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGraph, InvalidParams, MissingLatent, ZeroDegree

__all__ = ["SymmetricOperator", "build_l_alpha", "build_l_tilde",
           "bethe_hessian", "bh_r_c", "null_vector", "l_tilde_lambda"]

DENSE_WARN = 20000


@dataclass(frozen=True)
class SymmetricOperator:
    """Dense symmetric matrix with a tag.

    ``kind`` is one of "L_alpha", "L_tilde", "BetheHessian"; ``param`` is
    alpha for the first two and r for the last.
    """
    entries: np.ndarray
    kind: str
    param: float

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _check(graph):
    if graph.n == 0:
        raise EmptyGraph("empty graph")
    if graph.n > DENSE_WARN:
        warnings.warn(f"dense operator of size {graph.n}; memory is O(n^2)",
                      RuntimeWarning)
    if np.any(graph.degrees < 1):
        raise ZeroDegree("every node needs at least one neighbour")


def build_l_alpha(graph, alpha):
    """The alpha-normalized modularity operator L_alpha (alpha=0: modularity)."""
    _check(graph)
    if not np.isfinite(alpha):
        raise InvalidParams("alpha must be finite")
    d = graph.degrees
    n = graph.n
    two_m = d.sum()
    s = d ** -alpha
    B = graph.adjacency.astype(float)
    B -= np.outer(d, d) / two_m
    B *= s[:, None]
    B *= s[None, :]
    B *= two_m ** alpha / np.sqrt(n)
    B = 0.5 * (B + B.T)
    return SymmetricOperator(B, "L_alpha", float(alpha))


def null_vector(graph, alpha):
    """D^alpha 1, annihilated by L_alpha."""
    return graph.degrees ** alpha


def _indicator(labels, k):
    J = np.zeros((labels.size, k))
    J[np.arange(labels.size), labels] = 1.0
    return J


def build_l_tilde(latent, graph, alpha):
    """Random equivalent of L_alpha built from the hidden q and labels.

    n^(-1/2) D_q^-a X D_q^-a + U Lambda U^T with
    X = A - q q^T - n^(-1/2) D_q J M J^T D_q (zero diagonal),
    U = [n^(-1/2) D_q^(1-a) J, D_q^-a X 1 / q^T 1] and
    Lambda = [[(I - 1c^T) M (I - c 1^T), -1], [-1^T, 0]].
    """
    if latent is None:
        raise MissingLatent("the random equivalent needs the latent model")
    q = np.asarray(latent.q, dtype=float)
    g = np.asarray(latent.labels, dtype=int)
    if q.size != graph.n or g.size != graph.n:
        raise MissingLatent("latent model does not match the graph")
    n = graph.n
    M = latent.params.affinity
    K = M.shape[0]
    J = _indicator(g, K)
    c = J.sum(axis=0) / n
    X = graph.adjacency.astype(float)
    X -= np.outer(q, q)
    X -= (q[:, None] * M[g][:, g] * q[None, :]) / np.sqrt(n)
    np.fill_diagonal(X, 0.0)
    s = q ** -alpha
    U = np.empty((n, K + 1))
    U[:, :K] = (q ** (1 - alpha))[:, None] * J / np.sqrt(n)
    U[:, K] = s * X.sum(axis=1) / q.sum()
    Lam = l_tilde_lambda(M, c)
    X *= s[:, None]
    X *= s[None, :]
    X /= np.sqrt(n)
    X += U @ Lam @ U.T
    X = 0.5 * (X + X.T)
    return SymmetricOperator(X, "L_tilde", float(alpha))


def l_tilde_lambda(M, c):
    """The (K+1)x(K+1) bordered block Lambda."""
    M = np.asarray(M, dtype=float)
    c = np.asarray(c, dtype=float)
    K = c.size
    P = np.eye(K) - np.outer(np.ones(K), c)
    Lam = np.zeros((K + 1, K + 1))
    Lam[:K, :K] = P @ M @ P.T
    Lam[:K, K] = Lam[K, :K] = -1.0
    return Lam


def bh_r_c(graph):
    """r_c = sum d^2 / sum d - 1."""
    if graph.n == 0:
        raise EmptyGraph("empty graph")
    d = graph.degrees
    return float((d ** 2).sum() / d.sum() - 1)


def bethe_hessian(graph, r):
    """H(r) = (r^2 - 1) I - r A + D."""
    if graph.n == 0:
        raise EmptyGraph("empty graph")
    H = -r * graph.adjacency.astype(float)
    H[np.diag_indices(graph.n)] += r * r - 1 + graph.degrees
    return SymmetricOperator(H, "BetheHessian", float(r))
