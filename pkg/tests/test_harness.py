import json
import math
import os

import numpy as np
import pytest

from proxas.harness import checks, cli
from proxas.harness.config import ConfigError, ExperimentConfig, RunSpec, load_config, parse_config_text
from proxas.harness.experiment import CSV_HEADER, grid_search, run_experiment
from proxas.harness.libsvm import LibSVMError, parse_libsvm, write_libsvm
from proxas.harness.synthetic import SyntheticSpec, gen_synthetic
from proxas.optimizers import Method, OutputRule
from proxas.problem import DatasetInstance, loss_constants
from proxas.regularizers import RegKind, hard_threshold, prox
from proxas.sampling import cauchy_ratio, make_independent_optimal

SMALL = "n = 80\nd = 20\nepochs = 3\nseed = 4\n"


# --- LibSVM ------------------------------------------------------------------------

def write(tmp_path, text, name="d.svm"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_two_lines(tmp_path):
    data = parse_libsvm(write(tmp_path, "+1 1:0.5 3:2\n-1\n"))
    assert data.n == 2 and data.d == 3
    assert data.labels.tolist() == [1.0, -1.0]
    cols, vals = data.row(0)
    assert cols.tolist() == [0, 2] and vals.tolist() == [0.5, 2.0]
    assert data.row(1)[0].size == 0


def test_parse_comments_and_override(tmp_path):
    data = parse_libsvm(write(tmp_path, "# header\n\n-1 2:1.5 # note\n+1 qid:3 1:1\n"), n_features=10)
    assert data.n == 2 and data.d == 10


@pytest.mark.parametrize("text,msg", [
    ("", "no examples"),
    ("+1 1:1\n+1 2:x\n", ":2:"),
    ("+1 3:1 2:1\n", "increase"),
    ("+1 0:1\n", "bad feature"),
    ("2 1:1\n", "label"),
    ("+1 1-1\n", "bad feature"),
])
def test_parse_errors(tmp_path, text, msg):
    with pytest.raises(LibSVMError, match=msg):
        parse_libsvm(write(tmp_path, text))


def test_label_map(tmp_path):
    p = write(tmp_path, "0 1:1\n1 2:1\n")
    with pytest.raises(LibSVMError):
        parse_libsvm(p)
    data = parse_libsvm(p, label_map="0:-1,1:1")
    assert data.labels.tolist() == [-1.0, 1.0]


def test_round_trip_exact(tmp_path):
    data = gen_synthetic(SyntheticSpec(n=50, d=15, sparsity=0.5, seed=2))
    path = tmp_path / "rt.svm"
    write_libsvm(data, path)
    again = parse_libsvm(path, n_features=data.d)
    assert again.same_as(data)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_round_trip_empty_row(tmp_path):
    data = DatasetInstance.from_rows([{}, {2: 1e-300}], [-1, 1], d=3)
    write_libsvm(data, tmp_path / "e.svm")
    assert parse_libsvm(tmp_path / "e.svm").same_as(data)


# --- synthetic data -------------------------------------------------------------------

def test_synthetic_deterministic():
    a = gen_synthetic(SyntheticSpec(seed=11, n=100, d=30))
    b = gen_synthetic(SyntheticSpec(seed=11, n=100, d=30))
    c = gen_synthetic(SyntheticSpec(seed=12, n=100, d=30))
    assert a.same_as(b) and not a.same_as(c)


def test_synthetic_equal_norms_give_uniform_probabilities():
    data = gen_synthetic(SyntheticSpec(n=100, d=30, het=1.0, seed=1))
    norms = data.row_norms()
    np.testing.assert_allclose(norms, 1.0, rtol=1e-14)
    s = make_independent_optimal(loss_constants(data).G, 10)
    np.testing.assert_allclose(s.p, 0.1, rtol=1e-12)


def test_synthetic_heterogeneity():
    data = gen_synthetic(SyntheticSpec(n=100, het=10.0, seed=0))
    assert cauchy_ratio(loss_constants(data).G) > 1.5
    norms = data.row_norms()
    assert norms.min() >= 1 - 1e-12 and norms.max() <= 10 + 1e-12


def test_synthetic_sparsity_and_validation():
    data = gen_synthetic(SyntheticSpec(n=200, d=50, sparsity=0.8, seed=5))
    assert 0.1 < data.data.size / (200 * 50) < 0.3
    assert np.all(np.diff(data.indptr) > 0)
    for bad in (dict(n=0), dict(sparsity=1.0), dict(noise=1.5), dict(het=0.5)):
        with pytest.raises(ValueError):
            SyntheticSpec(**bad)


def test_synthetic_label_noise_rate():
    clean = gen_synthetic(SyntheticSpec(n=2000, noise=0.0, seed=3))
    noisy = gen_synthetic(SyntheticSpec(n=2000, noise=0.2, seed=3))
    assert np.array_equal(clean.data, noisy.data)
    assert 0.17 < np.mean(clean.labels != noisy.labels) < 0.23


# --- configuration ------------------------------------------------------------------

def test_config_defaults_and_sizes():
    cfg = parse_config_text("")
    assert [r.name for r in cfg.runs] == ["sgd-U", "sgd-I", "sarah-U", "sarah-I", "spider-U", "spider-I"]
    assert cfg.lam == 0.01 and cfg.regularizer is RegKind.LHALF and cfg.seed == 0
    assert cfg.sizes(500) == (23, 23, 250)


def test_config_parse_values():
    cfg = parse_config_text("regularizer = l0\nlambda = 0.5 # weight\nmethods = sarah-I\n"
                            "eta = 0.1\nb = 4\nm = auto\nB = 10\noutput_rule = random\nmax_ifo = 1000\n"
                            "het = 3\nlabel_noise = 0\n")
    assert cfg.regularizer is RegKind.L0 and cfg.lam == 0.5
    assert cfg.runs == (RunSpec(Method.SARAH, "I"),)
    assert cfg.sizes(100) == (4, 10, 10)
    assert cfg.output_rule is OutputRule.RANDOM and cfg.max_ifo == 1000
    assert cfg.synthetic.het == 3.0 and cfg.synthetic.noise == 0.0


@pytest.mark.parametrize("text", [
    "methods =\n", "methods = adam-U\n", "methods = sarah-X\n", "lambda = -1\n", "eta = fast\n",
    "eta = -0.1\n", "unknown = 3\n", "epochs = ten\n", "b = 0\n", "sparsity = 2\n", "etas = \n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_config_relative_data_path(tmp_path):
    (tmp_path / "sub").mkdir()
    p = tmp_path / "sub" / "exp.cfg"
    p.write_text("data = d.svm\n")
    assert load_config(p).data == os.path.join(str(tmp_path / "sub"), "d.svm")


# --- experiments ----------------------------------------------------------------------

def test_two_methods_two_csvs(tmp_path):
    cfg = parse_config_text(SMALL + "methods = sarah-U, spider-I\n")
    res = run_experiment(cfg, out=str(tmp_path))
    assert sorted(os.listdir(tmp_path)) == ["sarah-U.csv", "spider-I.csv", "summary.json"]
    lines = (tmp_path / "sarah-U.csv").read_bytes().split(b"\n")
    assert lines[0].decode() == CSV_HEADER and lines[-1] == b""
    assert all(len(l.split(b",")) == 6 for l in lines[1:-1])
    summary = json.loads((tmp_path / "summary.json").read_text())
    observed = [float(l.split(b",")[2]) for name in ("sarah-U", "spider-I")
                for l in (tmp_path / f"{name}.csv").read_bytes().split(b"\n")[1:-1]]
    assert summary["f_star"] == max(0.0, min(observed)) == res.f_star
    assert set(summary["runs"]) == {"sarah-U", "spider-I"}


def test_csv_seventeen_digits(tmp_path):
    run_experiment(parse_config_text(SMALL + "methods = sgd-U\n"), out=str(tmp_path))
    row = (tmp_path / "sgd-U.csv").read_text().splitlines()[2].split(",")
    assert float(row[2]) == float(f"{float(row[2]):.17g}")
    assert len(row[2].replace(".", "").replace("-", "").lstrip("0").split("e")[0]) <= 17


def strip_elapsed(path):
    return [l.rsplit(",", 1)[0] for l in path.read_text().splitlines()]


def test_rerun_identical_except_elapsed(tmp_path):
    cfg = parse_config_text(SMALL)
    run_experiment(cfg, out=str(tmp_path / "a"))
    run_experiment(cfg, out=str(tmp_path / "b"))
    for name in os.listdir(tmp_path / "a"):
        if name.endswith(".csv"):
            assert strip_elapsed(tmp_path / "a" / name) == strip_elapsed(tmp_path / "b" / name)
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_parallel_matches_serial(tmp_path):
    cfg = parse_config_text(SMALL)
    run_experiment(cfg, out=str(tmp_path / "a"))
    run_experiment(parse_config_text(SMALL + "jobs = 4\n"), out=str(tmp_path / "b"))
    for name in os.listdir(tmp_path / "a"):
        if name.endswith(".csv"):
            assert strip_elapsed(tmp_path / "a" / name) == strip_elapsed(tmp_path / "b" / name)


def test_run_seeds_derive_from_master(tmp_path):
    run_experiment(parse_config_text(SMALL.replace("seed = 4", "seed = 12")), out=str(tmp_path))
    runs = json.loads((tmp_path / "summary.json").read_text())["runs"]
    names = ["sgd-U", "sgd-I", "sarah-U", "sarah-I", "spider-U", "spider-I"]
    assert [runs[n]["seed"] for n in names] == [12 ^ k for k in range(6)]


def test_libsvm_experiment(tmp_path):
    data = gen_synthetic(SyntheticSpec(n=40, d=8, seed=1))
    write_libsvm(data, tmp_path / "d.svm")
    cfg = parse_config_text(f"data = {tmp_path / 'd.svm'}\nepochs = 2\nmethods = sarah-I\n")
    res = run_experiment(cfg, out=str(tmp_path / "out"))
    assert res.reports["sarah-I"].x.shape == (8,)


def test_grid_search(tmp_path):
    cfg = parse_config_text(SMALL + "methods = sarah-U, sgd-I\n")
    rep = grid_search(cfg, [10, 1, 1e-1, 1e-2, 1e-3, 1e-4])
    for entry in rep["runs"].values():
        assert len(entry["entries"]) == 6
        assert entry["selected"] in [1e-4, 1e-3, 1e-2, 1e-1, 1, 10]
        assert all(e["ifo"] >= rep["budget"] or e["ifo"] > 0 for e in entry["entries"])
    single = grid_search(cfg, [0.05])
    assert all(e["selected"] == 0.05 for e in single["runs"].values())


def test_grid_flags_non_finite(rng):
    # huge features: eta * gradient overflows to inf at the largest step size
    data = DatasetInstance.from_dense(1e10 * rng.standard_normal((40, 5)), np.where(rng.random(40) < 0.5, -1, 1))
    cfg = parse_config_text("epochs = 2\nmethods = sgd-U\nregularizer = l1\ninit = zeros\n")
    rep = grid_search(cfg, [1e300, 0.01], data=data)
    entries = {e["eta"]: e for e in rep["runs"]["sgd-U"]["entries"]}
    assert entries[1e300]["finite"] is False and entries[1e300]["final_objective"] is None
    assert rep["runs"]["sgd-U"]["selected"] == 0.01
    diverged = grid_search(cfg, [1e300], data=data)
    assert diverged["runs"]["sgd-U"]["selected"] is None


def test_grid_tie_prefers_smaller_eta(small_synthetic):
    # lambda huge: every step size zeroes x, so all final objectives tie
    cfg = parse_config_text("epochs = 2\nmethods = sgd-U\nregularizer = l0\nlambda = 1e6\n")
    rep = grid_search(cfg, [1.0, 0.1, 0.5], data=small_synthetic)
    objs = {e["final_objective"] for e in rep["runs"]["sgd-U"]["entries"]}
    assert len(objs) == 1 and rep["runs"]["sgd-U"]["selected"] == 0.1


def test_experiment_with_grid_eta(tmp_path):
    cfg = parse_config_text(SMALL + "methods = sarah-I\neta = grid\netas = 0.01, 0.1\n")
    res = run_experiment(cfg, out=str(tmp_path))
    assert res.etas["sarah-I"] in (0.01, 0.1)


# --- CLI ---------------------------------------------------------------------------------

def test_cli_run_and_grid(tmp_path, capsys):
    cfgp = tmp_path / "e.cfg"
    cfgp.write_text(SMALL + "methods = sgd-U, spider-U\n")
    assert cli.main(["run", "--config", str(cfgp), "--out", str(tmp_path / "o")]) == 0
    assert sorted(os.listdir(tmp_path / "o")) == ["sgd-U.csv", "spider-U.csv", "summary.json"]
    assert cli.main(["grid", "--config", str(cfgp), "--etas", "0.1,0.01", "--out", str(tmp_path / "g")]) == 0
    rep = json.loads((tmp_path / "g" / "grid.json").read_text())
    assert rep["etas"] == [0.01, 0.1]


def test_cli_gen_data(tmp_path):
    out = tmp_path / "syn.svm"
    assert cli.main(["gen-data", "--n", "30", "--d", "6", "--het", "4", "--sparsity", "0.2",
                     "--seed", "9", "--out", str(out)]) == 0
    data = parse_libsvm(out, n_features=6)
    assert data.same_as(gen_synthetic(SyntheticSpec(n=30, d=6, het=4.0, sparsity=0.2, seed=9)))
    assert cli.main(["gen-data", "--n", "0", "--out", str(out)]) == 1


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("lambda = -2\n")
    assert cli.main(["run", "--config", str(bad)]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    nodata = tmp_path / "nodata.cfg"
    nodata.write_text("data = nothere.svm\n")
    assert cli.main(["run", "--config", str(nodata)]) == 2
    (tmp_path / "broken.svm").write_text("+1 1:a\n")
    broken = tmp_path / "broken.cfg"
    broken.write_text("data = broken.svm\n")
    assert cli.main(["run", "--config", str(broken)]) == 2


def test_verify_passes_and_negative_control(capsys, monkeypatch):
    results = checks.run_checks()
    assert all(r.passed for r in results), checks.format_table(results)
    assert "13/13 checks passed" in checks.format_table(results)

    def wrong_threshold(reg, v, eta):
        if reg.kind is RegKind.L0:
            return hard_threshold(v, 0.5 * eta * reg.lam)  # threshold sqrt(eta lam) instead of sqrt(2 eta lam)
        return prox(reg, v, eta)

    bad = {r.name: r.passed for r in checks.run_checks(prox_fn=wrong_threshold)}
    assert not bad["prox vs grid oracle"] and not bad["L0 threshold probes"]
    assert bad["gradient vs finite differences"]


def test_cli_verify_exit_code(monkeypatch, capsys):
    from proxas.harness.checks import CheckResult
    monkeypatch.setattr(checks, "run_checks", lambda seed=0: [CheckResult("x", False, "forced", 0.0)])
    assert cli.main(["verify"]) == 3
    monkeypatch.setattr(checks, "run_checks", lambda seed=0: [CheckResult("x", True, "ok", 0.0)])
    assert cli.main(["verify"]) == 0
    assert "PASS" in capsys.readouterr().out
