"""DCSBM generation, edge-list I/O and the degree-based weight estimators.

A graph is kept as a dense boolean adjacency matrix; the regime of interest
is dense (mean degree of order n) so sparse storage buys nothing.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyGraph, InvalidMeasure, InvalidParams,
                     InvalidProbability, LabelMismatch, ParseError)

__all__ = [
    "WeightMeasure", "WeightLaw", "DcsbmParams", "Graph", "LatentModel",
    "sample_dcsbm", "class_counts", "load_edge_list", "save_edge_list",
    "save_latent", "load_latent", "estimate_weights", "parse_weight_law",
]

_EPS = 1e-9


# ---------------------------------------------------------------------------
# weight measures and laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightMeasure:
    """Discrete probability measure on (0, 1).

    ``support`` is sorted ascending and ``mass`` sums to one.  All the
    fixed-point integrals of :mod:`rmt` are sums over these atoms.
    """
    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.support, dtype=float))
        p = np.atleast_1d(np.asarray(self.mass, dtype=float))
        if q.size == 0 or q.shape != p.shape:
            raise InvalidMeasure("measure needs matching, non-empty support and mass")
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise InvalidMeasure("masses must be positive")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InvalidMeasure(f"masses sum to {p.sum()!r}, not 1")
        if np.any(q <= 0) or np.any(q >= 1):
            raise InvalidMeasure("support must lie strictly inside (0, 1)")
        order = np.argsort(q, kind="stable")
        q, p = q[order], p[order]
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "support", q)
        object.__setattr__(self, "mass", p)

    @classmethod
    def from_atoms(cls, atoms):
        """Build from ``[(q_j, p_j), ...]``."""
        atoms = list(atoms)
        if not atoms:
            raise InvalidMeasure("empty atom list")
        q, p = zip(*atoms)
        return cls(np.array(q, float), np.array(p, float))

    @classmethod
    def point(cls, q0):
        return cls(np.array([q0], float), np.array([1.0]))

    @classmethod
    def from_samples(cls, q, bins=200):
        """Empirical measure of the samples ``q``.

        With ``bins=None`` every distinct value is an atom.  Otherwise the
        values are grouped into ``bins`` equal-width bins over [min, max] and
        each non-empty bin becomes one atom placed at the mean of its members
        (this keeps the first moment exact).
        """
        q = np.asarray(q, dtype=float).ravel()
        if q.size == 0:
            raise InvalidMeasure("no samples")
        if np.any(q <= 0) or np.any(q >= 1):
            warnings.warn("weight samples outside (0, 1) clipped", RuntimeWarning)
            q = np.clip(q, _EPS, 1 - _EPS)
        if bins is None:
            vals, counts = np.unique(q, return_counts=True)
            return cls(vals, counts / q.size)
        lo, hi = q.min(), q.max()
        if hi - lo < 1e-12:
            return cls.point(q.mean())
        idx = np.minimum(((q - lo) / (hi - lo) * bins).astype(int), bins - 1)
        counts = np.bincount(idx, minlength=bins)
        sums = np.bincount(idx, weights=q, minlength=bins)
        keep = counts > 0
        mass = counts[keep] / q.size
        return cls(sums[keep] / counts[keep], mass / mass.sum())

    @property
    def atoms(self):
        return list(zip(self.support.tolist(), self.mass.tolist()))

    @property
    def mean(self):
        """m_mu, the first moment."""
        return float(self.mass @ self.support)

    def power_mean(self, s):
        """Integral of q**s against the measure."""
        return float(self.mass @ self.support ** s)

    def v_alpha(self, alpha):
        """v_mu^alpha = integral of q^(2 alpha)."""
        return self.power_mean(2 * alpha)

    def __len__(self):
        return self.support.size


@dataclass(frozen=True)
class WeightLaw:
    """Law of the intrinsic weights q_i.

    kind="atoms": finitely many masses ``atoms=((q, p), ...)``.
    kind="powerlaw": density proportional to q**(-exponent) on [lo, hi].
    """
    kind: str
    atoms: tuple = ()
    exponent: float = 0.0
    lo: float = 0.0
    hi: float = 0.0

    @classmethod
    def discrete(cls, atoms):
        atoms = tuple((float(q), float(p)) for q, p in atoms)
        law = cls("atoms", atoms=atoms)
        law.validate()
        return law

    @classmethod
    def point(cls, q0):
        return cls.discrete([(q0, 1.0)])

    @classmethod
    def powerlaw(cls, exponent, lo, hi):
        law = cls("powerlaw", exponent=float(exponent), lo=float(lo), hi=float(hi))
        law.validate()
        return law

    def validate(self):
        if self.kind == "atoms":
            if not self.atoms:
                raise InvalidParams("weight law has no atoms")
            q = np.array([a[0] for a in self.atoms])
            p = np.array([a[1] for a in self.atoms])
            if np.any(q <= 0) or np.any(q >= 1):
                raise InvalidParams("weight-law support must lie in (0, 1)")
            if np.any(p <= 0) or abs(p.sum() - 1) > 1e-9:
                raise InvalidParams("weight-law masses must be positive and sum to 1")
        elif self.kind == "powerlaw":
            if not (0 < self.lo < self.hi < 1):
                raise InvalidParams("power-law support must satisfy 0 < lo < hi < 1")
        else:
            raise InvalidParams(f"unknown weight law kind {self.kind!r}")

    def sample(self, rng, n):
        if self.kind == "atoms":
            q = np.array([a[0] for a in self.atoms])
            p = np.array([a[1] for a in self.atoms])
            return rng.choice(q, size=n, p=p / p.sum())
        # inverse CDF of the truncated power law
        u = rng.random(n)
        e, lo, hi = self.exponent, self.lo, self.hi
        if abs(e - 1) < 1e-12:
            return lo * (hi / lo) ** u
        a, b = lo ** (1 - e), hi ** (1 - e)
        return (a + u * (b - a)) ** (1 / (1 - e))

    def measure(self, nodes=200):
        """Exact measure (atoms) or a Gauss-Legendre discretization (power law)."""
        if self.kind == "atoms":
            return WeightMeasure.from_atoms(self.atoms)
        x, w = np.polynomial.legendre.leggauss(nodes)
        q = 0.5 * (self.hi - self.lo) * x + 0.5 * (self.hi + self.lo)
        p = w * q ** (-self.exponent)
        return WeightMeasure(q, p / p.sum())

    def to_dict(self):
        if self.kind == "atoms":
            return {"kind": "atoms", "atoms": [list(a) for a in self.atoms]}
        return {"kind": "powerlaw", "exponent": self.exponent,
                "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == "atoms":
            return cls.discrete(d["atoms"])
        return cls.powerlaw(d["exponent"], d["lo"], d["hi"])

    def __str__(self):
        if self.kind == "atoms":
            return ",".join(f"{p:g}@{q:g}" for q, p in self.atoms)
        return f"powerlaw:{self.exponent:g}:{self.lo:g}:{self.hi:g}"


def parse_weight_law(text):
    """Parse ``"0.75@0.1,0.25@0.5"``, ``"0.5"`` or ``"powerlaw:3:0.05:0.3"``."""
    text = text.strip()
    try:
        if text.startswith("powerlaw:"):
            _, e, lo, hi = text.split(":")
            return WeightLaw.powerlaw(float(e), float(lo), float(hi))
        atoms = []
        for tok in text.split(","):
            if "@" in tok:
                p, q = tok.split("@")
                atoms.append((float(q), float(p)))
            else:
                atoms.append((float(tok), 1.0))
        if len(atoms) > 1 and any("@" not in t for t in text.split(",")):
            raise ValueError("mixed atom syntax")
        return WeightLaw.discrete(atoms)
    except (ValueError, TypeError) as exc:
        raise InvalidParams(f"cannot parse weight law {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# model parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DcsbmParams:
    n: int
    k: int
    proportions: np.ndarray
    affinity: np.ndarray
    weight_law: WeightLaw

    def __post_init__(self):
        c = np.asarray(self.proportions, dtype=float).ravel()
        M = np.asarray(self.affinity, dtype=float)
        object.__setattr__(self, "proportions", c)
        object.__setattr__(self, "affinity", M)
        self.validate()

    @classmethod
    def with_delta(cls, n, proportions, delta, weight_law):
        """Affinity M = delta * I_K."""
        c = np.asarray(proportions, dtype=float)
        return cls(int(n), c.size, c, delta * np.eye(c.size), weight_law)

    def validate(self):
        c, M = self.proportions, self.affinity
        if self.k < 1 or c.size != self.k:
            raise InvalidParams(f"need {self.k} class proportions, got {c.size}")
        if np.any(c <= 0) or abs(c.sum() - 1) > 1e-9:
            raise InvalidParams("class proportions must be positive and sum to 1")
        if M.shape != (self.k, self.k):
            raise InvalidParams(f"affinity must be {self.k}x{self.k}")
        if not np.allclose(M, M.T, atol=1e-12):
            raise InvalidParams("affinity matrix must be symmetric")
        if self.n < 2:
            raise InvalidParams("n must be at least 2")
        self.weight_law.validate()

    def to_dict(self):
        return {"n": self.n, "k": self.k, "proportions": self.proportions.tolist(),
                "affinity": self.affinity.tolist(),
                "weight_law": self.weight_law.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n"]), int(d["k"]), np.array(d["proportions"]),
                   np.array(d["affinity"]), WeightLaw.from_dict(d["weight_law"]))


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

@dataclass
class Graph:
    """Simple undirected graph with no isolated node.

    ``node_names[i]`` is the external token of node i (edge-list input) or
    its index in the generated graph; ``dropped`` lists external nodes that
    were removed because they had no neighbour.
    """
    adjacency: np.ndarray
    labels: np.ndarray | None = None
    node_names: list | None = None
    dropped: list = field(default_factory=list)

    def __post_init__(self):
        A = np.asarray(self.adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidParams("adjacency must be square")
        A = A.astype(bool)
        if not np.array_equal(A, A.T):
            raise InvalidParams("adjacency must be symmetric")
        if A.diagonal().any():
            raise InvalidParams("adjacency must have a zero diagonal")
        self.adjacency = A
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (A.shape[0],):
                raise LabelMismatch("labels must have one entry per node")
        if self.node_names is None:
            self.node_names = list(range(A.shape[0]))
        self.degrees = A.sum(axis=1).astype(float)
        if A.shape[0] and self.degrees.min() < 1:
            raise InvalidParams("graph has isolated nodes; use Graph.from_adjacency")

    @classmethod
    def from_adjacency(cls, A, labels=None, node_names=None):
        """Build a graph, discarding nodes that have no neighbour."""
        A = np.asarray(A).astype(bool)
        names = list(range(A.shape[0])) if node_names is None else list(node_names)
        keep = A.sum(axis=1) > 0
        dropped = [names[i] for i in np.flatnonzero(~keep)]
        if dropped:
            A = A[np.ix_(keep, keep)]
            labels = None if labels is None else np.asarray(labels)[keep]
            names = [names[i] for i in np.flatnonzero(keep)]
        return cls(A, labels, names, dropped)

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def twice_edges(self):
        """2m = d^T 1."""
        return float(self.degrees.sum())

    @property
    def k(self):
        return None if self.labels is None else int(self.labels.max()) + 1

    def permuted(self, perm):
        """Copy of the graph with nodes reordered by ``perm``."""
        perm = np.asarray(perm)
        A = self.adjacency[np.ix_(perm, perm)]
        labels = None if self.labels is None else self.labels[perm]
        return Graph(A, labels, [self.node_names[i] for i in perm], list(self.dropped))


@dataclass
class LatentModel:
    """Hidden variables of a generated graph (test oracle only)."""
    q: np.ndarray
    labels: np.ndarray
    params: DcsbmParams


def class_counts(n, c):
    """Largest-remainder rounding of n*c to integers summing to n."""
    raw = n * np.asarray(c, dtype=float)
    counts = np.floor(raw).astype(int)
    short = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def _check_probabilities(q, labels, C):
    # extreme P_ij over distinct pairs, class pair by class pair
    k = C.shape[0]
    ext = []
    for a in range(k):
        qa = np.sort(q[labels == a])
        ext.append((qa[:2], qa[-2:]))
    pmin, pmax = np.inf, -np.inf
    for a in range(k):
        for b in range(k):
            if a == b:
                lo = ext[a][0][0] * ext[a][0][1]
                hi = ext[a][1][0] * ext[a][1][1]
            else:
                lo = ext[a][0][0] * ext[b][0][0]
                hi = ext[a][1][-1] * ext[b][1][-1]
            pmin = min(pmin, lo * C[a, b], hi * C[a, b])
            pmax = max(pmax, lo * C[a, b], hi * C[a, b])
    if not (pmin > 0 and pmax < 1):
        raise InvalidProbability(
            f"edge probabilities leave (0, 1): range [{pmin:.4g}, {pmax:.4g}]")


def sample_dcsbm(params, seed, block=512):
    """Sample a DCSBM graph.

    P_ij = q_i q_j (1 + M_{g_i g_j}/sqrt(n)).  Class sizes are deterministic
    (largest remainder), labels are sorted by class and q_i are i.i.d. from
    the weight law.  Nodes left without neighbours are removed from both the
    graph and the returned latent model.
    """
    params.validate()
    n, c, M = params.n, params.proportions, params.affinity
    counts = class_counts(n, c)
    if counts.min() < 2:
        raise InvalidParams("every class needs at least two nodes")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(params.k), counts)
    q = params.weight_law.sample(rng, n)
    C = 1 + M / np.sqrt(n)

    _check_probabilities(q, labels, C)
    A = np.zeros((n, n), dtype=bool)
    Cg = C[labels]
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        P = q[i0:i1, None] * q[None, :] * Cg[i0:i1][:, labels]
        A[i0:i1] = rng.random((i1 - i0, n)) < P
    A = np.triu(A, 1)
    A |= A.T
    g = Graph.from_adjacency(A, labels)
    keep = np.ones(n, bool)
    keep[np.asarray(g.dropped, dtype=int)] = False
    return g, LatentModel(q[keep], labels[keep], params)


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def _tokens(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def load_edge_list(path, labels_path=None):
    """Read a whitespace-separated edge list ("u v" per line).

    Node tokens are arbitrary strings indexed in first-seen order.  Duplicate
    edges are merged, self-loops dropped with a warning and isolated nodes
    (present only through self-loops or the label file) removed.
    """
    index, names, edges = {}, [], []
    n_loops = 0
    for lineno, tok in _tokens(path):
        if len(tok) < 2:
            raise ParseError(f"expected 'u v', got {' '.join(tok)!r}", lineno)
        u, v = tok[0], tok[1]
        for t in (u, v):
            if t not in index:
                index[t] = len(names)
                names.append(t)
        if u == v:
            n_loops += 1
            continue
        edges.append((index[u], index[v]))
    if n_loops:
        warnings.warn(f"{n_loops} self-loop(s) dropped", RuntimeWarning)
    n = len(names)
    if n == 0:
        raise EmptyGraph(f"no edges in {path}")
    A = np.zeros((n, n), dtype=bool)
    if edges:
        e = np.array(edges)
        A[e[:, 0], e[:, 1]] = True
        A[e[:, 1], e[:, 0]] = True

    labels = None
    if labels_path is not None:
        raw = {}
        for lineno, tok in _tokens(labels_path):
            if len(tok) < 2:
                raise ParseError(f"expected 'node label', got {' '.join(tok)!r}", lineno)
            if tok[0] not in index:
                raise LabelMismatch(f"line {lineno}: unknown node {tok[0]!r}")
            raw[index[tok[0]]] = tok[1]
        missing = [names[i] for i in range(n) if i not in raw]
        if missing:
            raise LabelMismatch(f"no label for nodes {missing[:5]}")
        classes = sorted(set(raw.values()), key=_natural_key)
        cid = {c: i for i, c in enumerate(classes)}
        labels = np.array([cid[raw[i]] for i in range(n)])

    g = Graph.from_adjacency(A, labels, names)
    if g.dropped:
        warnings.warn(f"{len(g.dropped)} isolated node(s) dropped: {g.dropped[:5]}",
                      RuntimeWarning)
    if g.n == 0:
        raise EmptyGraph(f"no edges in {path}")
    return g


def _natural_key(s):
    try:
        return (0, float(s), s)
    except ValueError:
        return (1, 0.0, s)


def save_edge_list(graph, path, labels_path=None):
    iu, ju = np.nonzero(np.triu(graph.adjacency, 1))
    names = graph.node_names
    with open(path, "w") as fh:
        fh.write(f"# {graph.n} nodes, {iu.size} edges\n")
        for i, j in zip(iu, ju):
            fh.write(f"{names[i]} {names[j]}\n")
    if labels_path is not None:
        if graph.labels is None:
            raise LabelMismatch("graph has no labels to save")
        with open(labels_path, "w") as fh:
            for name, lab in zip(names, graph.labels):
                fh.write(f"{name} {lab}\n")


def save_latent(latent, path, node_names=None):
    names = list(range(latent.q.size)) if node_names is None else list(node_names)
    doc = {"nodes": [str(x) for x in names], "q": latent.q.tolist(),
           "labels": latent.labels.tolist(), "params": latent.params.to_dict()}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_latent(path, graph=None):
    """Read a latent sidecar; with ``graph`` the entries follow its node order."""
    with open(path) as fh:
        doc = json.load(fh)
    q, labels = np.array(doc["q"]), np.array(doc["labels"], dtype=int)
    if graph is not None:
        pos = {name: i for i, name in enumerate(doc["nodes"])}
        try:
            idx = np.array([pos[str(x)] for x in graph.node_names])
        except KeyError as exc:
            raise LabelMismatch(f"node {exc} missing from latent sidecar") from None
        q, labels = q[idx], labels[idx]
    return LatentModel(q, labels, DcsbmParams.from_dict(doc["params"]))


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def estimate_weights(graph, bins=200):
    """q_hat_i = d_i / sqrt(d^T 1) and the empirical measure of q_hat.

    ``bins`` compresses the empirical measure (None keeps one atom per
    distinct value).  Values outside (0, 1) are clipped in the measure only.
    """
    if graph.n == 0:
        raise EmptyGraph("empty graph")
    d = graph.degrees
    q_hat = d / np.sqrt(d.sum())
    return q_hat, WeightMeasure.from_samples(q_hat, bins=bins)
