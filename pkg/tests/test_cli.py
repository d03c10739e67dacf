import json

import numpy as np
import pytest

import biasforge as bf
from biasforge.cli import run

UNIFORM = '{"family":"uniform","params":{"lo":-1,"hi":1}}'


def read_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_catalog_lists_builtins(capsys):
    assert run(["catalog"]) == 0
    report = read_json(capsys)
    assert "uniform" in report["families"]
    assert "x-plus" in report["bias_functions"]
    assert report["suites"] == ["exact", "mc", "ambi", "fixed-point"]


def test_density_matches_closed_form(tmp_path):
    out = tmp_path / "density.csv"
    code = run(["density", "--dist", UNIFORM, "--bias", "x-plus", "--nodes", "[0]",
                "--m", "1", "--grid", "-1", "1", "201", "--out", str(out)])
    assert code == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    ts, p = rows[:, 0], rows[:, 1]
    closed = np.where((ts >= 0) & (ts <= 1), 1.5 * (1 - ts**2), 0.0)
    assert np.max(np.abs(p - closed)) <= 1e-8


def test_density_of_raw_distribution(tmp_path):
    out = tmp_path / "raw.csv"
    assert run(["density", "--dist", UNIFORM, "--grid", "-2", "2", "5",
                "--out", str(out)]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows[2, 1] == pytest.approx(0.5)


def test_verify_ambi_report(tmp_path):
    out = tmp_path / "report.json"
    assert run(["verify", "--suite", "ambi", "--seed", "1", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"]
    assert report["alpha"] == pytest.approx(5 / 12, abs=1e-10)


def test_transform_report_with_chain(tmp_path, capsys):
    code = run(["bias-km", "--dist", UNIFORM, "--bias", "identity", "--nodes", "[]",
                "--k", "0", "--m", "2", "--seed", "5"])
    assert code == 0
    report = read_json(capsys)
    assert report["beta"] == pytest.approx(1 / 6, abs=1e-12)
    assert report["chain_normalizers"] == [pytest.approx(1 / 6, abs=1e-12)]
    assert report["k"] == 0 and report["m"] == 2


def test_transform_k_mismatch_is_validation_error(capsys):
    code = run(["bias-km", "--dist", UNIFORM, "--bias", "x", "--nodes", "[0]",
                "--k", "2", "--m", "2"])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "InputError"


def test_sample_seed_determinism(tmp_path, monkeypatch):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    args = ["sample", "--dist", UNIFORM, "--bias", "x", "--nodes", "[0]",
            "--n", "200"]
    monkeypatch.setenv("BIASFORGE_SEED", "777")
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert run(args + ["--seed", "778", "--out", str(c)]) == 0
    assert a.read_text() != c.read_text()


def test_sample_density_round_trip(tmp_path):
    n = 30_000
    samples = tmp_path / "draws.csv"
    dens = tmp_path / "dens.csv"
    args = ["--dist", UNIFORM, "--bias", "x-plus", "--nodes", "[0]", "--m", "1"]
    assert run(["sample", *args, "--n", str(n), "--seed", "4", "--out", str(samples)]) == 0
    assert run(["density", *args, "--grid", "-1", "1", "2049", "--out", str(dens)]) == 0
    draws = np.loadtxt(samples, skiprows=1)
    rows = np.loadtxt(dens, delimiter=",", skiprows=1)
    ts, p = rows[:, 0], rows[:, 1]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(ts))))
    cum /= cum[-1]
    cdf = lambda x: np.interp(x, ts, cum)
    assert bf.ks_statistic(draws, cdf) < bf.ks_critical(n, 0.01)


def test_invalid_family_is_validation_error(capsys):
    code = run(["density", "--dist", '{"family":"cauchy"}', "--bias", "x",
                "--grid", "0", "1", "10"])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "InputError"
    assert "cauchy" in err["error"]["message"]


def test_sign_violation_is_validation_error(capsys):
    code = run(["transform", "--dist", UNIFORM, "--bias", "x", "--nodes", "[1]"])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "SignViolation"


def test_bad_grid_is_validation_error(capsys):
    code = run(["density", "--dist", UNIFORM, "--bias", "x", "--nodes", "[0]",
                "--grid", "0", "1", "1"])
    assert code == 2
    capsys.readouterr()


def test_piecewise_bias_json(capsys):
    # B(x) = x on [0, 1], zero elsewhere: one sign change at 0 over U[-1,1]
    bias_json = '{"pieces": [{"interval": [0, 1], "coeffs": [0, 1]}]}'
    code = run(["transform", "--dist", UNIFORM, "--bias", bias_json,
                "--nodes", "[0]"])
    assert code == 0
    report = read_json(capsys)
    assert report["alpha"] == pytest.approx(1 / 6, abs=1e-10)


def test_sign_bias_parsing(capsys):
    code = run(["transform", "--dist", '{"family":"exponential","params":{"rate":1}}',
                "--bias", "sign(x-0)"])
    assert code == 0
    assert read_json(capsys)["alpha"] == pytest.approx(1.0, rel=1e-9)


def test_x_mean_bias_centers_on_the_distribution(capsys):
    code = run(["transform", "--dist", '{"family":"normal","params":{"mean":0.7,"std":1}}',
                "--bias", "x-mean"])
    assert code == 0
    report = read_json(capsys)
    assert report["nodes"] == [pytest.approx(0.7, abs=1e-9)]
    assert report["alpha"] == pytest.approx(1.0, rel=1e-9)  # the variance


def test_verify_fixed_point_suite_cli(tmp_path):
    out = tmp_path / "fp.json"
    assert run(["verify", "--suite", "fixed-point", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"]
    assert set(report["sup_gaps"]) == {"normal-zero-bias", "half-normal-mixture",
                                       "shifted-normal-centered-bias",
                                       "exponential-equilibrium"}


def test_verify_exact_suite_cli(capsys):
    assert run(["verify", "--suite", "exact", "--seed", "3"]) == 0
    report = read_json(capsys)
    assert report["matched_order"]["passed"] and report["chain"]["passed"]


def test_verify_mc_suite_cli(tmp_path):
    out = tmp_path / "mc.json"
    assert run(["verify", "--suite", "mc", "--seed", "12", "--n", "4000",
                "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["count"] == 33


def test_distance_experiment(tmp_path):
    out = tmp_path / "bound.json"
    csv_out = tmp_path / "bound.csv"
    exp = {
        "target": {"family": "normal", "params": {}},
        "test_distribution": {"family": "normal", "params": {}},
        "operator": {"order": 1, "bias": "x", "nodes": [0]},
        "constants": {"c0": 1, "c1": 1, "c2": 1},
        "n_samples": 20_000,
        "seed": 9,
        "coupling": "self",
    }
    code = run(["distance", "--experiment", json.dumps(exp),
                "--out", str(out), "--out-csv", str(csv_out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["coupling_gap"] == 0.0
    assert report["bound"] == pytest.approx(report["alpha_dev"] + abs(report["b_mean"]))
    lines = csv_out.read_text().strip().splitlines()
    assert lines[0] == "ingredient,estimate,se"
    assert len(lines) == 5


def test_distance_experiment_from_file(tmp_path, capsys):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({
        "test_distribution": {"atoms": [[0, 0.5], [1, 0.5]]},
        "operator": {"order": 1, "bias": "sign(x-0)"},
        "constants": {"c0": 1, "c1": 1, "c2": 1},
        "n_samples": 5_000,
        "coupling": "independent",
    }))
    assert run(["distance", "--experiment", f"@{path}"]) == 0
    report = read_json(capsys)
    assert report["coupling_gap"] > 0.0
