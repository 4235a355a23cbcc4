import json
import subprocess
import sys

import numpy as np
import pytest

from rgw import cli
from rgw.measures import DiscreteMeasure, load_measure, point_mass, save_measure, tv_distance


@pytest.fixture()
def measure_files(tmp_path):
    mu1 = DiscreteMeasure([[0.0], [10.0]], [0.9, 0.1])
    d0 = point_mass([0.0])
    p1, p2 = tmp_path / "mu1.json", tmp_path / "d0.json"
    save_measure(mu1, p1)
    save_measure(d0, p2)
    return str(p1), str(p2)


def _run(capsys, argv):
    code = cli.main(argv)
    return code, capsys.readouterr().out


def test_gw_same_file(capsys, measure_files):
    mu1, _ = measure_files
    code, out = _run(capsys, ["gw", mu1, mu1, "--seed", "0"])
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] <= 1e-6
    assert set(doc) == {"value", "fw_gap", "restarts", "wall_time"}
    assert doc["wall_time"] is None


def test_gw_closed_form(capsys, measure_files):
    mu1, d0 = measure_files
    code, out = _run(capsys, ["gw", mu1, d0, "--seed", "0"])
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(np.sqrt(2 * 0.1 * 0.9) * 100, abs=1e-6)


def test_gw_missing_file(capsys, tmp_path, measure_files):
    code, _ = _run(capsys, ["gw", str(tmp_path / "nope.json"), measure_files[0]])
    assert code == 2


def test_pgw_nullity_and_eps_validation(capsys, measure_files):
    mu1, d0 = measure_files
    code, out = _run(capsys, ["pgw", mu1, d0, "--eps", "0.1", "--tol", "1e-12", "--seed", "0"])
    assert code == 0
    assert json.loads(out)["value"] <= 1e-6
    code, _ = _run(capsys, ["pgw", mu1, d0, "--eps", "1.0"])
    assert code == 2


def test_pgw_eps_zero_bytes_match_gw(capsys, measure_files):
    mu1, d0 = measure_files
    _, out_gw = _run(capsys, ["gw", mu1, d0, "--seed", "42"])
    _, out_pgw = _run(capsys, ["pgw", mu1, d0, "--eps", "0", "--seed", "42"])
    assert out_gw == out_pgw


def test_dump_coupling(capsys, tmp_path, measure_files):
    mu1, d0 = measure_files
    dump = tmp_path / "coupling.json"
    code, _ = _run(capsys, ["pgw", mu1, d0, "--eps", "0.1", "--dump-coupling", str(dump)])
    assert code == 0
    doc = json.loads(dump.read_text())
    assert doc["trim"] == 0.1
    assert np.asarray(doc["mass"]).shape == (2, 1)
    assert np.asarray(doc["mass"]).sum() == pytest.approx(0.9, abs=1e-9)


def test_contaminate_identity_and_far_outlier(capsys, tmp_path, measure_files):
    mu1, _ = measure_files
    out = tmp_path / "bad.json"
    code, _ = _run(
        capsys,
        ["contaminate", mu1, "--eps", "0.1", "--kind", "far_outlier", "--seed", "1", "--out", str(out)],
    )
    assert code == 0
    corrupted = load_measure(out)
    original = load_measure(mu1)
    assert corrupted.size == original.size + 1
    sidecar = json.loads((tmp_path / "bad.json.sidecar.json").read_text())
    assert sidecar["tv_actual"] <= sidecar["tv_budget"] + 1e-12
    # eps = 0 keeps the measure unchanged
    out0 = tmp_path / "same.json"
    _run(capsys, ["contaminate", mu1, "--eps", "0", "--kind", "far_outlier", "--out", str(out0)])
    assert tv_distance(load_measure(out0), original) == 0.0


def test_contaminate_mirror_blend_sidecar(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_measure(point_mass([0.0]), a)
    save_measure(point_mass([1.0]), b)
    out = tmp_path / "ab.json"
    code, _ = _run(
        capsys,
        [
            "contaminate", str(a), "--eps", "0.34", "--kind", "mirror_blend",
            "--partner", str(b), "--out", str(out),
        ],
    )
    assert code == 0
    sidecar = json.loads((tmp_path / "ab.json.sidecar.json").read_text())
    assert sidecar["tv_between"] == pytest.approx(sidecar["tv_between_identity"], abs=1e-12)
    assert sidecar["tv_between"] == pytest.approx(0.32, abs=1e-12)


def test_contaminate_bad_kind(capsys, tmp_path, measure_files):
    code, _ = _run(
        capsys,
        ["contaminate", measure_files[0], "--eps", "0.1", "--kind", "two_point", "--out", str(tmp_path / "x.json")],
    )
    assert code == 2


def _sweep_config(tmp_path, eps_grid, out_name="sweep.csv", trials=1):
    doc = {
        "family": {"family": "bounded_moment_k", "sigma": 1.0, "k": 8.0, "dim": 1, "member": "two_atom"},
        "adversary": "two_point",
        "estimators": [{"kind": "pgw", "solver": {"restarts": 6, "fw_gap_tol": 1e-12}}],
        "eps_grid": eps_grid,
        "trials": trials,
        "seed": 3,
        "out_path": str(tmp_path / out_name),
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))
    return cfg, doc


def test_risk_sweep_runs_and_echoes_config(capsys, tmp_path):
    cfg, doc = _sweep_config(tmp_path, [0.01, 0.05, 0.1])
    code, _ = _run(capsys, ["risk-sweep", str(cfg)])
    assert code == 0
    out = tmp_path / "sweep.csv"
    assert out.exists()
    summary = json.loads((tmp_path / "sweep.csv.summary.json").read_text())
    assert "slope_fits" in summary and "pgw" in summary["slope_fits"]
    resolved = json.loads((tmp_path / "sweep.csv.resolved.json").read_text())
    # round trip: run again from the resolved config, byte-identical CSV
    cfg2 = tmp_path / "resolved_config.json"
    resolved["out_path"] = str(tmp_path / "sweep2.csv")
    cfg2.write_text(json.dumps(resolved))
    code, _ = _run(capsys, ["risk-sweep", str(cfg2)])
    assert code == 0
    assert (tmp_path / "sweep2.csv").read_bytes() == out.read_bytes()


def test_risk_sweep_jobs_byte_identical(capsys, tmp_path):
    cfg, _ = _sweep_config(tmp_path, [0.01, 0.05, 0.1], trials=2)
    _run(capsys, ["risk-sweep", str(cfg), "--out", str(tmp_path / "j1.csv")])
    _run(capsys, ["risk-sweep", str(cfg), "--out", str(tmp_path / "j4.csv"), "--jobs", "4"])
    assert (tmp_path / "j1.csv").read_bytes() == (tmp_path / "j4.csv").read_bytes()


def test_risk_sweep_rejects_unknown_keys(capsys, tmp_path):
    cfg, doc = _sweep_config(tmp_path, [0.05])
    doc["bogus"] = 1
    cfg.write_text(json.dumps(doc))
    code, _ = _run(capsys, ["risk-sweep", str(cfg)])
    assert code == 2
    doc.pop("bogus")
    doc["family"]["typo"] = 2
    cfg.write_text(json.dumps(doc))
    assert cli.main(["risk-sweep", str(cfg)]) == 2


def test_risk_sweep_rejects_empty_grid_and_bad_json(capsys, tmp_path):
    cfg, doc = _sweep_config(tmp_path, [])
    code, _ = _run(capsys, ["risk-sweep", str(cfg)])
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["risk-sweep", str(bad)]) == 2


def test_metric_suite_command(capsys, tmp_path):
    out = tmp_path / "suite.json"
    code, text = _run(capsys, ["metric-suite", "--seed", "2", "--out", str(out)])
    assert code == 0
    doc = json.loads(text)
    assert doc["passed"] is True
    assert out.exists()


def test_convergence_command(capsys, tmp_path):
    doc = {
        "family": {
            "family": "bounded_moment_k", "sigma": 1.0, "k": 8.0, "dim": 1,
            "member": "two_atom", "member_eps": 0.1,
        },
        "n_grid": [50, 200],
        "trials": 5,
        "seed": 1,
        "out_path": str(tmp_path / "conv.csv"),
    }
    cfg = tmp_path / "conv.json"
    cfg.write_text(json.dumps(doc))
    code, _ = _run(capsys, ["convergence", str(cfg)])
    assert code == 0
    lines = (tmp_path / "conv.csv").read_text().splitlines()
    assert len(lines) == 1 + 10


def test_env_seed_lowest_precedence(capsys, tmp_path, measure_files, monkeypatch):
    mu1, d0 = measure_files
    monkeypatch.setenv("RGW_SEED", "5")
    _, out_env = _run(capsys, ["gw", mu1, d0])
    _, out_flag = _run(capsys, ["gw", mu1, d0, "--seed", "5"])
    assert out_env == out_flag


def test_console_script_entry_point(measure_files):
    mu1, d0 = measure_files
    proc = subprocess.run(
        [sys.executable, "-m", "rgw.cli", "gw", mu1, d0, "--seed", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == pytest.approx(np.sqrt(0.18) * 100, abs=1e-6)
