"""Acceptance criteria 1-9.

Each test records one PASS/FAIL line in ``conftest.ACCEPTANCE``; the lines
are printed in the "acceptance criteria" section at the end of the run.
"""
import time

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

import conftest
from dcsbm_spectral import presets
from dcsbm_spectral.cluster import (correct_rate, detect, empirical_class_stats,
                                    isolated_eigenvectors, overlap, regularize)
from dcsbm_spectral.graph import (DcsbmParams, Graph, WeightMeasure, estimate_weights,
                                  parse_weight_law, sample_dcsbm)
from dcsbm_spectral.operators import build_l_alpha, build_l_tilde, null_vector
from dcsbm_spectral.rmt import (alpha_opt, fixed_point_map, predict_spikes,
                                solve_fixed_point, solve_many, support_edge)
from dcsbm_spectral.theory import chi, chi_single_atom, theory_point, theory_stats

C8 = np.array([0.8, 0.2])


def record(num, ok, detail):
    conftest.ACCEPTANCE[num] = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(conftest.ACCEPTANCE[num])
    return ok


def top_abs_eig(mat):
    return float(np.abs(eigsh(mat, k=1, which="LM", return_eigenvectors=False)[0]))


# ---------------------------------------------------------------------------

def test_criterion_1_homogeneous_edge():
    q0, alpha, n = 0.5, 0.5, 4000
    p = DcsbmParams(n, 2, np.array([0.5, 0.5]), np.zeros((2, 2)), parse_weight_law(str(q0)))
    g, _ = sample_dcsbm(p, 0)
    mu = WeightMeasure.from_atoms([(q0, 1.0)])
    s_hat = support_edge(mu, alpha).s_plus
    closed = 2 * q0 ** (1 - 2 * alpha) * np.sqrt(1 - q0 ** 2)
    lam = top_abs_eig(build_l_alpha(g, alpha).entries)
    s_emp = support_edge(estimate_weights(g)[1], alpha).s_plus
    gap = abs(s_hat - lam) / s_hat
    ok = gap <= 0.05 and abs(s_hat - closed) <= 1e-3
    record(1, ok, f"S={s_hat:.5f} closed={closed:.5f} max|lambda|={lam:.4f} "
                  f"rel.gap={gap:.4f} (S from q_hat: {s_emp:.4f})")
    assert abs(s_hat - closed) <= 1e-3
    assert gap <= 0.05


def test_criterion_2_fig5(fig5_measure):
    t0 = time.time()
    a_opt, _ = alpha_opt(fig5_measure)
    # alpha_opt as estimated from a generated graph (Delta=10, near the transition)
    g10, _ = sample_dcsbm(presets.params("fig5", 10.0), 0)
    a_graph, _ = alpha_opt(estimate_weights(g10)[1])

    ov30 = []
    for seed in range(5):
        g, lat = sample_dcsbm(presets.params("fig5", 30.0), seed)
        ov30.append(detect(g, 3, alpha=0.0, seed=seed, true_labels=lat.labels).overlap)
    m30 = float(np.mean(ov30))

    # empirical transition at alpha_opt: first delta with mean overlap > 0.1
    transition = None
    sweep = {}
    for delta in np.arange(5.0, 17.0, 1.0):
        vals = []
        for seed in range(5):
            g, lat = sample_dcsbm(presets.params("fig5", delta), 100 + seed)
            vals.append(detect(g, 3, alpha=a_opt, seed=seed, true_labels=lat.labels).overlap)
        sweep[delta] = float(np.mean(vals))
        if sweep[delta] > 0.1:
            transition = float(delta)
            break

    ok_a = abs(a_opt - 0.07) <= 0.02 and abs(a_graph - 0.07) <= 0.02
    ok_o = abs(m30 - 0.818) <= 0.05
    ok_t = transition is not None and 9 <= transition <= 13
    curve = ", ".join(f"{d:g}:{v:.3f}" for d, v in sweep.items())
    record(2, ok_a and ok_o and ok_t,
           f"alpha_opt={a_opt:.4f} (graph estimate {a_graph:.4f}); overlap(a=0, D=30)="
           f"{m30:.3f} over 5 seeds {np.round(ov30, 3).tolist()}; transition at "
           f"D={transition} [{curve}] ({time.time() - t0:.0f} s)")
    assert ok_a and ok_o and ok_t


def test_criterion_3_spike_location(fig5_measure):
    alpha = 0.07
    rep = predict_spikes(fig5_measure, alpha, 30 * np.eye(3), np.full(3, 1 / 3))
    rho = float(rep.rho[0])
    tops = []
    for seed in range(3):
        g, _ = sample_dcsbm(presets.params("fig5", 30.0, n=4000), seed)
        tops.append(float(eigsh(build_l_alpha(g, alpha).entries, k=1, which="LA",
                                return_eigenvectors=False)[0]))
    top = float(np.median(tops))
    err = abs(top - rho) / rho
    ok = err <= 0.03
    record(3, ok, f"rho={rho:.4f} top eigenvalue median {top:.4f} of "
                  f"{np.round(tops, 4).tolist()} rel.err={err:.4f}")
    assert ok


def test_criterion_4_eigenvector_statistics(fig8_measure):
    alpha, n, delta = 0.5, 4000, 15.0
    M = delta * np.eye(2)
    th = theory_stats(fig8_measure, alpha, M, C8, n)
    nu, sig = th.nu[0], th.sigma[0, 0]
    means, variances = [], []
    for seed in range(10):
        g, lat = sample_dcsbm(presets.params("fig8", delta, n=n), seed)
        edge = support_edge(estimate_weights(g)[1], alpha)
        emb = isolated_eigenvectors(build_l_alpha(g, alpha), edge, 2)
        w = regularize(emb, g.degrees, alpha).W[:, 0]
        mu, cov = empirical_class_stats(w, lat.labels, 2)
        mu, cov = mu.ravel(), cov.ravel()
        # eigenvector sign is arbitrary: align with the theoretical means
        if np.dot(mu, nu) < 0:
            mu = -mu
        means.append(mu)
        variances.append(cov)
    m_med = np.median(means, axis=0)
    v_med = np.median(variances, axis=0)
    m_err = np.abs(m_med - nu) / np.abs(nu)
    v_err = np.abs(v_med - sig) / sig
    ok = bool(np.all(m_err <= 0.10) and np.all(v_err <= 0.20))
    record(4, ok, f"means {np.round(m_med, 5).tolist()} vs {np.round(nu, 5).tolist()} "
                  f"(rel.err {np.round(m_err, 3).tolist()}); variances "
                  f"{np.format_float_scientific(v_med[0], 3)}, "
                  f"{np.format_float_scientific(v_med[1], 3)} vs "
                  f"{np.format_float_scientific(sig[0], 3)}, "
                  f"{np.format_float_scientific(sig[1], 3)} (rel.err {np.round(v_err, 3).tolist()})")
    assert ok


def test_criterion_5_em_initialization():
    p = presets.params("fig8", 15.5)
    th, orc, rnd, rnd10 = [], [], [], []
    for seed in range(6):
        g, lat = sample_dcsbm(p, seed)
        th.append(correct_rate(lat.labels, detect(g, 2, alpha=0.5, init="theory",
                                                  c=C8).labels, 2))
        orc.append(correct_rate(lat.labels, detect(g, 2, alpha=0.5, init="oracle").labels, 2))
        # a single EM run from random parameters, five draws per graph
        for r in range(5):
            res = detect(g, 2, alpha=0.5, seed=1000 * seed + r, restarts=1, seeding="uniform")
            rnd.append(correct_rate(lat.labels, res.labels, 2))
        rnd10.append(correct_rate(lat.labels, detect(g, 2, alpha=0.5, seed=seed).labels, 2))
    t, o, r, r10 = (float(np.mean(x)) for x in (th, orc, rnd, rnd10))
    ok = abs(t - o) <= 0.03 and t - r >= 0.03 and o - r >= 0.03
    record(5, ok, f"theory={t:.4f} oracle={o:.4f} random(single run)={r:.4f} "
                  f"[paper 0.945 vs 0.891]; random best-of-10 k-means seeded={r10:.4f}")
    assert ok


def test_criterion_6_theory_point(fig8_measure):
    pt = theory_point(fig8_measure, 0.5, 15 * np.eye(2), C8, 4000, weighting="equal")
    ok = abs(pt["rate"] - 0.9385) <= 0.005
    bayes = theory_point(fig8_measure, 0.5, 15 * np.eye(2), C8, 4000)["rate"]
    record(6, ok, f"rate={pt['rate']:.5f} (equal class weights; Bayes-weighted {bayes:.5f})")
    assert ok


def test_criterion_7_properties(fig5_measure):
    checks = {}
    rng = np.random.default_rng(7)

    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(5, 200))
        A = np.triu(rng.random((n, n)) < rng.uniform(0.05, 0.6), 1)
        A = A | A.T
        idx = np.arange(n)
        A[idx, (idx + 1) % n] = A[(idx + 1) % n, idx] = True
        g = Graph(A)
        for a in (0.0, 0.37, 1.0):
            L = build_l_alpha(g, a).entries
            v = null_vector(g, a)
            worst = max(worst, np.linalg.norm(L @ v) / (np.linalg.norm(L, 2) * np.linalg.norm(v)))
    checks["null vector"] = (worst <= 1e-10, f"{worst:.1e}")

    ok = True
    for _ in range(50):
        t = rng.integers(0, 4, 60)
        pr = rng.integers(0, 4, 60)
        perm = rng.permutation(4)
        ok &= np.isclose(overlap(t, perm[pr], 4), overlap(t, pr, 4))
    checks["overlap permutation"] = (bool(ok), "50 draws")

    most = 0
    for K in (2, 3, 4):
        for _ in range(5):
            B = rng.normal(scale=30, size=(K, K))
            c = rng.dirichlet(np.full(K, 3.0)) * 0.9 + 0.1 / K
            rep = predict_spikes(fig5_measure, 0.5, (B + B.T) / 2, c)
            most = max(most, rep.isolated.size - (K - 1))
    g, lat = sample_dcsbm(presets.params("fig5", 30.0, n=1500), 0)
    ell = detect(g, 3, alpha=0.07).diagnostics["ell"]
    checks["ell <= K-1"] = (most <= 0 and ell <= 2, f"detect ell={ell}")

    s = support_edge(fig5_measure, 0.3).s_plus
    x = np.linspace(1.01 * s, 20 * s, 20)
    e2 = np.array([z.e2 for z in solve_many(fig5_measure, 0.3, x)])
    e2n = np.array([z.e2 for z in solve_many(fig5_measure, 0.3, -x)])
    checks["E2 monotone/odd"] = (bool(np.all(np.diff(e2) > 0) and np.allclose(e2n, -e2, atol=1e-12)),
                                 "20 points")

    res = 0.0
    for a in (0.0, 0.5, 1.0):
        sol = solve_fixed_point(fig5_measure, a, 1.5 * support_edge(fig5_measure, a).s_plus)
        f1, f2 = fixed_point_map(fig5_measure, a, sol)
        res = max(res, abs(f1 - sol.e1), abs(f2 - sol.e2))
    checks["fixed-point residual"] = (res < 1e-9, f"{res:.1e}")

    rel = 0.0
    for q0, a, k in ((0.5, 0.5, 1.2), (0.3, 0.0, 2.0), (0.7, 1.0, 1.05)):
        mu = WeightMeasure.from_atoms([(q0, 1.0)])
        rho = k * support_edge(mu, a).s_plus
        sol = solve_fixed_point(mu, a, rho, tol=1e-14, cap=100000)
        ref = chi_single_atom(q0, a, rho)[0]
        rel = max(rel, abs(chi(mu, a, sol) - ref) / abs(ref))
    checks["chi closed form"] = (rel < 1e-8, f"{rel:.1e}")

    # no communities: at most two eigenvalues beyond the bulk edge
    counts = {}
    for a in (0.0, 0.5, 1.0):
        good = 0
        for seed in range(10):
            g, _ = sample_dcsbm(presets.params("fig5", 0.0, n=4000), seed)
            s_hat = support_edge(estimate_weights(g)[1], a).s_plus
            w = eigsh(build_l_alpha(g, a).entries, k=6, which="LM",
                      return_eigenvectors=False)
            good += int(np.sum(np.abs(w) > s_hat * 1.02) <= 2)
        counts[a] = good
    checks["M=0 outliers"] = (all(v >= 9 for v in counts.values()),
                              " ".join(f"a={a:g}:{v}/10" for a, v in counts.items()))

    ok = all(v[0] for v in checks.values())
    record(7, ok, "; ".join(f"{k} {'ok' if v[0] else 'FAILED'} ({v[1]})"
                            for k, v in checks.items()))
    assert ok, {k: v for k, v in checks.items() if not v[0]}


def test_criterion_8_random_equivalent(fig5_measure):
    alpha = 0.07
    s = support_edge(fig5_measure, alpha).s_plus
    med = {}
    for n in (1000, 2000, 4000):
        gaps = []
        for seed in range(5):
            g, lat = sample_dcsbm(presets.params("fig5", 30.0, n=n), seed)
            D = build_l_alpha(g, alpha).entries - build_l_tilde(lat, g, alpha).entries
            gaps.append(top_abs_eig(D) / s)
        med[n] = float(np.median(gaps))
    ok = med[1000] > med[2000] > med[4000]
    record(8, ok, "median ||L - L_tilde||/S: " +
           ", ".join(f"n={n}: {v:.4f}" for n, v in med.items()))
    assert ok


def test_criterion_9_real_graphs():
    nx = pytest.importorskip("networkx", reason="networkx provides the karate club graph")
    kg = nx.karate_club_graph()
    A = nx.to_numpy_array(kg, nodelist=sorted(kg)) > 0
    labels = np.array([0 if kg.nodes[v]["club"] == "Mr. Hi" else 1 for v in sorted(kg)])
    g = Graph(A, labels)
    ov = [detect(g, 2, alpha=0.5, seed=s).overlap for s in range(5)]
    ok = float(np.median(ov)) >= 0.85
    record(9, ok, f"Karate alpha=0.5 overlap median {np.median(ov):.3f} over 5 EM seeds "
                  f"{np.round(ov, 3).tolist()}; Polblogs skipped (no dataset supplied)")
    assert ok
