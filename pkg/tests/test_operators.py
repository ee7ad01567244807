import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import eigsh

from conftest import path_graph, ring_graph
from dcsbm_spectral import presets
from dcsbm_spectral.errors import EmptyGraph, InvalidParams, MissingLatent, ZeroDegree
from dcsbm_spectral.graph import Graph, sample_dcsbm
from dcsbm_spectral.operators import (bethe_hessian, bh_r_c, build_l_alpha,
                                      build_l_tilde, l_tilde_lambda, null_vector)
from dcsbm_spectral.rmt import support_edge


def test_path_graph_by_hand():
    # d = (1, 2, 1), 2m = 4, n = 3
    L = build_l_alpha(path_graph(3), 0.5).entries
    B = np.array([[-0.25, 0.5, -0.25], [0.5, -1.0, 0.5], [-0.25, 0.5, -0.25]])
    s = np.array([1, 1 / np.sqrt(2), 1])
    expect = 2 / np.sqrt(3) * B * np.outer(s, s)
    np.testing.assert_allclose(L, expect, atol=1e-15)


def test_alpha_zero_is_scaled_modularity():
    g = ring_graph(12, 2)
    d = g.degrees
    B = g.adjacency - np.outer(d, d) / d.sum()
    np.testing.assert_allclose(build_l_alpha(g, 0.0).entries, B / np.sqrt(12), atol=1e-15)


def test_operator_tags_and_errors():
    g = path_graph(4)
    op = build_l_alpha(g, 0.3)
    assert (op.kind, op.param, op.n) == ("L_alpha", 0.3, 4)
    assert np.asarray(op).shape == (4, 4)
    with pytest.raises(InvalidParams):
        build_l_alpha(g, np.nan)
    with pytest.raises(EmptyGraph):
        build_l_alpha(Graph(np.zeros((0, 0), bool)), 0.5)
    with pytest.raises(MissingLatent):
        build_l_tilde(None, g, 0.5)


def test_zero_degree_rejected():
    # bypass the constructor check to reach the operator guard
    g = path_graph(3)
    g.degrees = np.array([1.0, 0.0, 1.0])
    with pytest.raises(ZeroDegree):
        build_l_alpha(g, 0.5)


@st.composite
def connected_ish(draw):
    n = draw(st.integers(4, 40))
    p = draw(st.floats(0.05, 0.9))
    seed = draw(st.integers(0, 2 ** 31))
    rng = np.random.default_rng(seed)
    A = np.triu(rng.random((n, n)) < p, 1)
    A |= A.T
    A |= ring_graph(n).adjacency  # no isolated node
    return Graph(A)


@given(connected_ish(), st.floats(-1.0, 2.0))
@settings(max_examples=80, deadline=None)
def test_null_vector_annihilated(g, alpha):
    L = build_l_alpha(g, alpha).entries
    v = null_vector(g, alpha)
    assert np.linalg.norm(L @ v) <= 1e-10 * np.linalg.norm(L, 2) * np.linalg.norm(v)
    np.testing.assert_array_equal(L, L.T)


def test_lambda_border():
    M = np.array([[3.0, -1.0], [-1.0, 2.0]])
    c = np.array([0.7, 0.3])
    Lam = l_tilde_lambda(M, c)
    P = np.eye(2) - np.outer(np.ones(2), c)
    np.testing.assert_allclose(Lam[:2, :2], P @ M @ P.T)
    assert Lam[2].tolist() == [-1.0, -1.0, 0.0]
    np.testing.assert_array_equal(Lam, Lam.T)
    # M = 0 leaves only the border
    assert not l_tilde_lambda(np.zeros((2, 2)), c)[:2, :2].any()


def test_bethe_hessian_entries():
    g = ring_graph(10, 2)
    assert bh_r_c(g) == pytest.approx(3.0)  # d - 1 on a d-regular graph
    H1 = bethe_hessian(g, 1.0).entries
    np.testing.assert_array_equal(H1, np.diag(g.degrees) - g.adjacency)
    H = bethe_hessian(g, 2.5)
    assert (H.kind, H.param) == ("BetheHessian", 2.5)
    assert H.entries[0, 0] == pytest.approx(2.5 ** 2 - 1 + 4)
    assert H.entries[0, 1] == -2.5 and H.entries[0, 5] == 0.0
    p = path_graph(3)
    assert bh_r_c(p) == pytest.approx(6 / 4 - 1)


def test_bulk_edge_matches_limit(fig5_measure):
    # M = 0: the extreme eigenvalues sit at the limiting edge
    p = presets.params("fig5", 0.0, n=2000)
    g, _ = sample_dcsbm(p, 11)
    alpha = 0.5
    L = build_l_alpha(g, alpha).entries
    top = eigsh(L, k=1, which="LA", return_eigenvectors=False)[0]
    bot = eigsh(L, k=1, which="SA", return_eigenvectors=False)[0]
    s = support_edge(fig5_measure, alpha).s_plus
    assert abs(top - s) < 0.06 * s
    assert abs(-bot - s) < 0.06 * s


def test_random_equivalent_close():
    # spectral-norm gap relative to the edge, Fig. 5 parameters, delta = 30
    p = presets.params("fig5", 30.0, n=2000)
    g, lat = sample_dcsbm(p, 2)
    alpha = 0.07
    D = build_l_alpha(g, alpha).entries - build_l_tilde(lat, g, alpha).entries
    gap = np.abs(eigsh(D, k=1, which="LM", return_eigenvectors=False)[0])
    s = support_edge(p.weight_law.measure(), alpha).s_plus
    assert gap / s < 0.15


def test_random_equivalent_keeps_spikes():
    # the isolated eigenvalues of L and L_tilde agree
    p = presets.params("fig5", 30.0, n=1500)
    g, lat = sample_dcsbm(p, 4)
    a = np.sort(np.linalg.eigvalsh(build_l_alpha(g, 0.0).entries))[-2:]
    b = np.sort(np.linalg.eigvalsh(build_l_tilde(lat, g, 0.0).entries))[-2:]
    np.testing.assert_allclose(a, b, rtol=0.05)
