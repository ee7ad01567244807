import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from dcsbm_spectral.cli import main, parse_affinity, parse_grid, parse_proportions, UsageError
from dcsbm_spectral.graph import load_edge_list, load_latent


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def fig5_graph(tmp_path_factory):
    d = tmp_path_factory.mktemp("fig5")
    prefix = str(d / "g")
    assert main(["generate", "--preset", "fig5", "--x", "30", "--n", "1500",
                 "--seed", "1", "--out", prefix]) == 0
    return prefix


def test_parsers():
    np.testing.assert_allclose(parse_proportions("uniform", 4), [0.25] * 4)
    np.testing.assert_allclose(parse_proportions("0.8,0.2", 2), [0.8, 0.2])
    np.testing.assert_allclose(parse_affinity("delta:6", 2), 6 * np.eye(2))
    np.testing.assert_allclose(parse_affinity("diag:10:-10", 2), [[10, -10], [-10, 10]])
    np.testing.assert_allclose(parse_affinity("1,2;2,3", 2), [[1, 2], [2, 3]])
    np.testing.assert_allclose(parse_grid("1:2:0.5"), [1, 1.5, 2])
    assert list(parse_grid("3,1")) == [3.0, 1.0]
    for bad in (lambda: parse_proportions("0.5", 2), lambda: parse_affinity("1,2;3", 2),
                lambda: parse_grid("1:2"), lambda: parse_grid("1:2:0"),
                lambda: parse_affinity("delta:x", 2)):
        with pytest.raises(UsageError):
            bad()


def test_generate_files(fig5_graph):
    g = load_edge_list(fig5_graph + ".edges", fig5_graph + ".labels")
    lat = load_latent(fig5_graph + ".latent.json", g)
    assert g.n <= 1500 and g.k == 3
    assert lat.q.shape == (g.n,)
    meta = json.load(open(fig5_graph + ".latent.json"))
    assert "params" in json.dumps(meta)


def test_generate_explicit_and_powerlaw(tmp_path):
    out = str(tmp_path / "p")
    rc = main(["generate", "--n", "300", "--k", "2", "--c", "0.5,0.5", "--m", "delta:20",
               "--mu", "powerlaw:3:0.05:0.3", "--seed", "0", "--out", out])
    assert rc == 0
    assert load_edge_list(out + ".edges").n > 200


def test_usage_errors(tmp_path, capsys):
    assert main(["generate", "--n", "300", "--m", "delta:20", "--mu", "0.5",
                 "--out", str(tmp_path / "x")]) == 2
    assert main(["generate", "--n", "300", "--k", "2", "--m", "delta:20", "--mu", "0.5@2",
                 "--out", str(tmp_path / "x")]) == 2
    assert main(["detect", "--edges", str(tmp_path / "missing.edges"), "--k", "2"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "error" in capsys.readouterr().err


def test_detect_outputs(fig5_graph, tmp_path):
    out, diag = tmp_path / "pred.txt", tmp_path / "diag.csv"
    rc = main(["detect", "--edges", fig5_graph + ".edges", "--labels", fig5_graph + ".labels",
               "--k", "3", "--alpha", "0", "--out", str(out), "--diagnostics", str(diag)])
    assert rc == 0
    lines = out.read_text().split()
    assert len(lines) % 2 == 0 and set(lines[1::2]) <= {"0", "1", "2"}
    d = {r["key"]: r["value"] for r in rows(diag)}
    assert d["method"] == "l_alpha" and d["below_transition"] in ("False", "0", "false")
    assert float(d["overlap"]) > 0.7


def test_detect_below_transition(tmp_path):
    prefix = str(tmp_path / "null")
    main(["generate", "--preset", "fig5", "--x", "0", "--n", "1200", "--out", prefix])
    assert main(["detect", "--edges", prefix + ".edges", "--k", "3", "--alpha", "0.5",
                 "--out", str(tmp_path / "p.txt")]) == 3


def test_alpha_opt_from_graph(tmp_path, capsys):
    prefix = str(tmp_path / "g10")
    main(["generate", "--preset", "fig5", "--x", "10", "--n", "3000", "--seed", "2",
          "--out", prefix])
    out = tmp_path / "tau.csv"
    assert main(["alpha-opt", "--edges", prefix + ".edges", "--out", str(out)]) == 0
    r = rows(out)
    assert list(r[0]) == ["alpha", "tau"] and len(r) == 51
    a = float(capsys.readouterr().err.split("alpha_opt")[-1].strip(" =:\n").split()[0])
    assert a == pytest.approx(0.07, abs=0.02)


def test_alpha_opt_needs_input():
    assert main(["alpha-opt"]) == 2


def test_spectrum(tmp_path, fig5_graph):
    prefix = str(tmp_path / "null")
    main(["generate", "--preset", "fig5", "--x", "0", "--n", "800", "--out", prefix])
    out = tmp_path / "s.csv"
    assert main(["spectrum", "--edges", prefix + ".edges", "--alpha", "0.5",
                 "--out", str(out)]) == 0
    r = rows(out)
    kinds = [x["kind"] for x in r]
    assert list(r[0]) == ["kind", "value"]
    assert kinds.count("eigenvalue") == load_edge_list(prefix + ".edges").n
    assert "rho" not in kinds and "s_plus" in kinds and "tau" in kinds
    out2 = tmp_path / "s2.csv"
    main(["spectrum", "--edges", fig5_graph + ".edges", "--alpha", "0.07", "--k", "3",
          "--c", "uniform", "--m", "delta:30", "--mu", "0.75@0.1,0.25@0.5", "--out", str(out2)])
    assert [x["kind"] for x in rows(out2)].count("rho") == 2


def test_phase_and_theory_headers(tmp_path):
    out = tmp_path / "phase.csv"
    assert main(["phase", "--mu", "0.75@0.1,0.25@0.5", "--alphas", "0,0.5",
                 "--deltas", "5,30", "--out", str(out)]) == 0
    r = rows(out)
    assert list(r[0]) == ["delta", "alpha", "lambda_mbar", "ratio"] and len(r) == 4
    assert r[0]["ratio"] in ("", "nan", "NaN")
    out = tmp_path / "th.csv"
    assert main(["theory", "--preset", "fig8", "--deltas", "15", "--out", str(out)]) == 0
    r = rows(out)
    assert list(r[0]) == ["delta", "alpha", "correct_rate", "nu1", "nu2", "sigma1", "sigma2"]
    assert float(r[0]["correct_rate"]) == pytest.approx(0.9385, abs=0.005)


def test_benchmark_small_and_deterministic(tmp_path):
    args = ["benchmark", "--preset", "fig5", "--n", "900", "--seeds", "2", "--grid", "40",
            "--methods", "a0,a1"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    r = rows(a)
    assert list(r[0]) == ["delta", "method", "seed", "overlap"]
    assert {x["method"] for x in r} == {"a0", "a1"}
    assert sum(x["seed"] == "mean" for x in r) == 2


@pytest.mark.skipif(shutil.which("dcsbm-spectral") is None, reason="entry point not installed")
def test_console_script():
    res = subprocess.run(["dcsbm-spectral", "theory", "--preset", "fig8", "--deltas", "15"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0].startswith("delta,alpha,correct_rate")
