"""Command-line interface.

    dcsbm-spectral generate | detect | alpha-opt | spectrum | phase | theory | benchmark

Tabular output is CSV with a header row; ``detect`` writes predicted labels
as "node label" lines, the format of the label files.  Exit codes: 0 success, 2 usage
error, 3 detection fell back to a single class (below the transition),
4 numerical failure.  DCSBM_WORKERS sets the number of benchmark worker
processes (default 1).
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import presets as P
from .cluster import correct_rate, detect, overlap
from .errors import DcsbmError
from .graph import (DcsbmParams, estimate_weights, load_edge_list,
                    parse_weight_law, sample_dcsbm, save_edge_list, save_latent)
from .operators import build_l_alpha
from .rmt import alpha_opt, predict_spikes, spike_ratio_curve, support_edge
from .theory import theory_curve

EXIT_OK, EXIT_USAGE, EXIT_BELOW, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _floats(text, what):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}") from None


def parse_proportions(text, k):
    if text is None or text == "uniform":
        if k is None:
            raise UsageError("--c uniform needs --k")
        return np.full(k, 1.0 / k)
    c = np.array(_floats(text, "--c"))
    if k is not None and c.size != k:
        raise UsageError(f"--c has {c.size} entries but --k is {k}")
    return c


def parse_affinity(text, k):
    """"delta:30" (30 I_K), "diag:10:-10" (10 on, -10 off the diagonal) or
    rows "a,b;c,d"."""
    try:
        if text.startswith("delta:"):
            return float(text.split(":")[1]) * np.eye(k)
        if text.startswith("diag:"):
            _, on, off = text.split(":")
            return (float(on) - float(off)) * np.eye(k) + float(off)
    except ValueError:
        raise UsageError(f"cannot parse --m {text!r}") from None
    rows = [_floats(row, "--m") for row in text.split(";")]
    if any(len(r) != k for r in rows) or len(rows) != k:
        raise UsageError(f"--m must be {k}x{k}")
    return np.array(rows)


def parse_alpha(text):
    if text == "opt":
        return "opt"
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"alpha must be a number or 'opt', got {text!r}") from None


def parse_grid(text):
    """"a:b:step" (inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        try:
            a, b, s = (float(x) for x in parts)
        except ValueError:
            raise UsageError(f"grid {text!r} is not 'a:b:step'") from None
        if s <= 0:
            raise UsageError("grid step must be positive")
        return list(np.round(np.arange(a, b + s / 2, s), 10))
    return _floats(text, "grid")


def _measure(args, graph=None):
    if getattr(args, "mu", None):
        return parse_weight_law(args.mu).measure()
    if graph is None:
        raise UsageError("need --mu or a graph")
    return estimate_weights(graph)[1]


def _writer(path):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    return fh, csv.writer(fh)


def _close(fh):
    if fh is not sys.stdout:
        fh.close()
    else:
        fh.flush()


def _fmt(x):
    if isinstance(x, float):
        return "nan" if np.isnan(x) else f"{x:.10g}"
    return x


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_generate(args):
    if args.preset:
        params = P.params(args.preset, args.x if args.x is not None
                          else P.PRESETS[args.preset]["grid"][0], args.n)
    else:
        if args.k is None or args.n is None or args.m is None or args.mu is None:
            raise UsageError("generate needs --n, --k, --m and --mu (or --preset)")
        c = parse_proportions(args.c, args.k)
        params = DcsbmParams(args.n, args.k, c, parse_affinity(args.m, args.k),
                             parse_weight_law(args.mu))
    g, latent = sample_dcsbm(params, args.seed)
    pre = args.out
    save_edge_list(g, pre + ".edges", pre + ".labels")
    save_latent(latent, pre + ".latent.json", g.node_names)
    print(f"wrote {pre}.edges, {pre}.labels, {pre}.latent.json (n={g.n})")
    return EXIT_OK


def cmd_detect(args):
    g = load_edge_list(args.edges, args.labels)
    K = args.k if args.k is not None else g.k
    if K is None:
        raise UsageError("--k is required without a labels file")
    c = parse_proportions(args.c, K) if args.c else None
    res = detect(g, K, alpha=parse_alpha(args.alpha), method=args.method,
                 init=args.init, seed=args.seed, c=c, clusterer=args.clusterer,
                 kappa=args.kappa, spurious_tol=args.spurious_tol,
                 restarts=args.restarts)
    # same "node label" format as the ground-truth label files
    fh = sys.stdout if args.out in (None, "-") else open(args.out, "w")
    for name, lab in zip(g.node_names, res.labels):
        fh.write(f"{name} {int(lab)}\n")
    _close(fh)
    if args.diagnostics:
        fh, w = _writer(args.diagnostics)
        w.writerow(["key", "value"])
        w.writerow(["method", res.method])
        w.writerow(["alpha", _fmt(res.alpha if res.alpha is not None else float("nan"))])
        w.writerow(["below_transition", int(res.below_transition)])
        if "edge" in res.diagnostics:
            w.writerow(["s_plus", _fmt(res.diagnostics["edge"].s_plus)])
            w.writerow(["tau", _fmt(res.diagnostics["edge"].tau)])
        if res.embedding is not None:
            for lam in res.embedding.eigenvalues:
                w.writerow(["eigenvalue", _fmt(float(lam))])
        if res.overlap is not None:
            w.writerow(["overlap", _fmt(float(res.overlap))])
        _close(fh)
    return EXIT_BELOW if res.below_transition else EXIT_OK


def cmd_alpha_opt(args):
    if args.edges:
        measure = estimate_weights(load_edge_list(args.edges))[1]
    elif args.mu:
        measure = _measure(args)
    else:
        raise UsageError("alpha-opt needs --edges or --mu")
    a, curve = alpha_opt(measure, grid=(0.0, 1.0, args.step))
    fh, w = _writer(args.out)
    w.writerow(["alpha", "tau"])
    for al, t in curve:
        w.writerow([_fmt(al), _fmt(t)])
    _close(fh)
    print(f"alpha_opt={a:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_spectrum(args):
    g = load_edge_list(args.edges, args.labels)
    measure = _measure(args, g)
    alpha = parse_alpha(args.alpha)
    if alpha == "opt":
        alpha = alpha_opt(measure)[0]
    edge = support_edge(measure, alpha)
    vals = np.linalg.eigvalsh(build_l_alpha(g, alpha).entries)
    rho = []
    if args.m:
        if args.c is None:
            raise UsageError("predicted spikes need --c with --m")
        K = args.k or len(args.c.split(","))
        c = parse_proportions(args.c, K)
        rep = predict_spikes(measure, alpha, parse_affinity(args.m, K), c, edge)
        rho = [float(r) for r in rep.rho[np.isfinite(rep.rho)]]
    fh, w = _writer(args.out)
    w.writerow(["kind", "value"])
    w.writerow(["alpha", _fmt(float(alpha))])
    w.writerow(["s_plus", _fmt(edge.s_plus)])
    w.writerow(["tau", _fmt(edge.tau)])
    for r in rho:
        w.writerow(["rho", _fmt(r)])
    for v in vals:
        w.writerow(["eigenvalue", _fmt(float(v))])
    _close(fh)
    n_out = int(np.sum(np.abs(vals) > edge.s_plus * 1.02))
    print(f"s_plus={edge.s_plus:.5g} outside={n_out} predicted_spikes={len(rho)}",
          file=sys.stderr)
    return EXIT_OK


def cmd_phase(args):
    measure = _measure(args)
    K = args.k
    c = parse_proportions(args.c, K)
    deltas = parse_grid(args.deltas)
    fh, w = _writer(args.out)
    w.writerow(["delta", "alpha", "lambda_mbar", "ratio"])
    for a in [parse_alpha(x) for x in args.alphas.split(",")]:
        al = alpha_opt(measure)[0] if a == "opt" else a
        ratios = spike_ratio_curve(measure, al, c, deltas)
        lam = [np.max(np.abs(np.linalg.eigvals((np.diag(c) - np.outer(c, c)) * d)))
               for d in deltas]
        for d, l_, r in zip(deltas, lam, ratios):
            w.writerow([_fmt(float(d)), _fmt(float(al)), _fmt(float(l_)), _fmt(float(r))])
    _close(fh)
    return EXIT_OK


def cmd_theory(args):
    if args.preset:
        pr = P.PRESETS[args.preset]
        measure = P.weight_law(args.preset).measure()
        c, n = np.array(pr["c"]), pr["n"]
        deltas = parse_grid(args.deltas) if args.deltas else pr["grid"]
        alphas = pr.get("alphas", [pr.get("alpha", 0.5)])
        weighting = args.weighting or "equal"
    else:
        if not (args.mu and args.c and args.n):
            raise UsageError("theory needs --mu, --c and --n (or --preset)")
        measure = _measure(args)
        c = parse_proportions(args.c, 2)
        n = args.n
        deltas = parse_grid(args.deltas or "0.5:20:0.5")
        alphas = None
        weighting = args.weighting or "proportional"
    if args.alphas:
        alphas = [parse_alpha(x) for x in args.alphas.split(",")]
    alphas = alphas or [0.5]
    fh, w = _writer(args.out)
    w.writerow(["delta", "alpha", "correct_rate", "nu1", "nu2", "sigma1", "sigma2"])
    for a in alphas:
        for row in theory_curve(measure, a, c, n, deltas, weighting):
            w.writerow([_fmt(float(x)) for x in row])
    _close(fh)
    return EXIT_OK


# benchmark ------------------------------------------------------------------

def _bench_job(job):
    preset, x, seed, methods, n = job
    pr = P.PRESETS[preset]
    params = P.params(preset, x, n)
    g, _ = sample_dcsbm(params, seed)
    K = params.k
    out = []
    for m in methods:
        kw = {}
        if m == "bh":
            kw = dict(method="bethe_hessian")
        elif m.startswith("a"):
            kw = dict(alpha=parse_alpha(m[1:]))
        else:
            kw = dict(alpha=pr.get("alpha", 0.5))
            if m == "random1":
                kw.update(init="random", restarts=1, seeding="uniform")
            else:
                kw.update(init=m, c=params.proportions)
        res = detect(g, K, seed=seed, **kw)
        if pr["value"] == "correct_rate":
            val = correct_rate(g.labels, res.labels, K)
        else:
            val = overlap(g.labels, res.labels, K)
        out.append((x, m, seed, float(val)))
    return out


def cmd_benchmark(args):
    pr = P.PRESETS[args.preset]
    if pr["value"] == "theory_rate":
        args.deltas = args.grid
        args.alphas = None
        args.weighting = args.weighting
        return cmd_theory(args)
    grid = parse_grid(args.grid) if args.grid else pr["grid"]
    methods = args.methods.split(",") if args.methods else pr["methods"]
    seeds = list(range(args.seed, args.seed + args.seeds))
    jobs = [(args.preset, float(x), s, methods, args.n) for x in grid for s in seeds]
    workers = int(os.environ.get("DCSBM_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_bench_job, jobs))
    else:
        results = [_bench_job(j) for j in jobs]
    rows = [r for res in results for r in res]
    fh, w = _writer(args.out)
    w.writerow([pr["x"], "method", "seed", pr["value"]])
    for x, m, s, v in rows:
        w.writerow([_fmt(x), m, s, _fmt(v)])
    for x in grid:
        for m in methods:
            vals = [v for (xx, mm, _, v) in rows if xx == float(x) and mm == m]
            w.writerow([_fmt(float(x)), m, "mean", _fmt(float(np.mean(vals)))])
    _close(fh)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="dcsbm-spectral",
        description="Alpha-normalized spectral community detection for DCSBM graphs.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def model_flags(p, need_k=False):
        p.add_argument("--n", type=int, help="number of nodes")
        p.add_argument("--k", type=int, required=need_k, help="number of classes K")
        p.add_argument("--c", default=None,
                       help="class proportions: 'uniform' or a comma list")
        p.add_argument("--m", default=None,
                       help="affinity M: 'delta:D', 'diag:ON:OFF' or rows 'a,b;c,d'")
        p.add_argument("--mu", default=None,
                       help="weight law: '0.75@0.1,0.25@0.5' or 'powerlaw:EXP:LO:HI'")

    p = sub.add_parser("generate", help="sample a DCSBM graph", formatter_class=fmt)
    model_flags(p, need_k=False)
    p.add_argument("--preset", choices=sorted(P.PRESETS), default=None)
    p.add_argument("--x", type=float, default=None, help="sweep value for --preset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="graph",
                   help="output prefix (.edges, .labels, .latent.json)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="run the detection pipeline", formatter_class=fmt)
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", default=None, help="ground truth, for the overlap")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--alpha", default="opt", help="number in [0,1] or 'opt'")
    p.add_argument("--method", choices=["l_alpha", "bethe_hessian"], default="l_alpha")
    p.add_argument("--init", choices=["random", "theory", "oracle"], default="random")
    p.add_argument("--c", default=None, help="class proportions (theory init)")
    p.add_argument("--clusterer", choices=["em", "kmeans"], default="em")
    p.add_argument("--kappa", type=float, default=0.02, help="isolation margin")
    p.add_argument("--spurious-tol", type=float, default=0.1)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="predicted labels, 'node label' lines")
    p.add_argument("--diagnostics", default=None, help="diagnostics CSV")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("alpha-opt", help="threshold curve and optimal alpha",
                       formatter_class=fmt)
    p.add_argument("--edges", default=None)
    p.add_argument("--mu", default=None)
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_alpha_opt)

    p = sub.add_parser("spectrum", help="eigenvalues of L_alpha with edge annotations",
                       formatter_class=fmt)
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--alpha", default="0.5")
    model_flags(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("phase", help="theoretical spike/edge ratio vs delta",
                       formatter_class=fmt)
    p.add_argument("--mu", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--c", default="uniform")
    p.add_argument("--alphas", default="0,0.25,0.5,0.75,1,opt")
    p.add_argument("--deltas", default="10:150:5")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("theory", help="theoretical correct rate (K=2)",
                       formatter_class=fmt)
    p.add_argument("--preset", choices=["fig8", "fig9"], default=None)
    p.add_argument("--mu", default=None)
    p.add_argument("--c", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--alphas", default=None, help="comma list, may include 'opt'")
    p.add_argument("--deltas", default=None, help="'a:b:step' or comma list")
    p.add_argument("--weighting", choices=["proportional", "equal"], default=None,
                   help="class weights in the error (default: equal for presets)")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("benchmark", help="overlap / correct-rate sweeps",
                       formatter_class=fmt)
    p.add_argument("--preset", choices=sorted(P.PRESETS), required=True)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--grid", default=None, help="override sweep grid")
    p.add_argument("--methods", default=None, help="comma list, e.g. a0,aopt,bh")
    p.add_argument("--n", type=int, default=None, help="override n")
    p.add_argument("--weighting", choices=["proportional", "equal"], default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_benchmark)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DcsbmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc, ArithmeticError) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
