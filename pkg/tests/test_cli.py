"""End-to-end tests for the command-line harness.

Every test drives hsbench.cli.main in process with a JSON config written to
tmp_path, then inspects exit codes and artifact files.  The expensive solver
settings are kept deliberately loose (degree 6, tol 2e-2) so each run stays
under a second or two.
"""

import csv
import hashlib
import json
import os

import numpy as np
import pytest

from hsbench import qsp
from hsbench.cli import main
from hsbench.haar_analytics import read_curve_file


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


QUES_BASE = {
    "n_values": [2],
    "degrees": [6],
    "t": 1.0,
    "tol": 2e-2,
    "instances": 4,
    "shots": 300,
    "depth": 10,
    "seed": 17,
}


# -- config handling -------------------------------------------------------------


def test_missing_seed_is_a_config_error(tmp_path):
    cfg = {k: v for k, v in QUES_BASE.items() if k != "seed"}
    path = write_config(tmp_path, "cfg.json", cfg)
    assert run("ques", "--config", path, "--out", tmp_path / "out") == 2


def test_unknown_field_is_rejected(tmp_path):
    path = write_config(tmp_path, "cfg.json", {**QUES_BASE, "bogus": 1})
    assert run("ques", "--config", path, "--out", tmp_path / "out") == 2


def test_bad_coupling_style_is_a_config_error(tmp_path):
    path = write_config(tmp_path, "cfg.json", {**QUES_BASE, "coupling": "ring"})
    assert run("ques", "--config", path, "--out", tmp_path / "out") == 2


def test_nonsense_threads_rejected(tmp_path):
    path = write_config(tmp_path, "cfg.json", QUES_BASE)
    assert run("ques", "--config", path, "--out", tmp_path / "out", "--threads", 0) == 2


def test_malformed_json_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    assert run("ques", "--config", path, "--out", tmp_path / "out") == 2


def test_seed_flag_overrides_file(tmp_path):
    path = write_config(tmp_path, "cfg.json", {"t": 1.0, "d": 6, "tol": 2e-2, "seed": 1})
    out = tmp_path / "out"
    assert run("solve-phases", "--config", path, "--out", out, "--seed", 99) == 0
    manifest = load_json(out / "manifest.json")
    assert manifest["config"]["seed"] == 99


def test_threads_env_fallback_and_flag_precedence(tmp_path, monkeypatch):
    path = write_config(tmp_path, "cfg.json", {"t": 1.0, "d": 6, "tol": 2e-2, "seed": 1})
    monkeypatch.setenv("HSBENCH_THREADS", "3")
    out_a = tmp_path / "a"
    assert run("solve-phases", "--config", path, "--out", out_a) == 0
    assert load_json(out_a / "manifest.json")["threads"] == 3
    out_b = tmp_path / "b"
    assert run("solve-phases", "--config", path, "--out", out_b, "--threads", 2) == 0
    assert load_json(out_b / "manifest.json")["threads"] == 2


def test_garbage_env_threads_is_a_config_error(tmp_path, monkeypatch):
    path = write_config(tmp_path, "cfg.json", {"t": 1.0, "d": 6, "tol": 2e-2, "seed": 1})
    monkeypatch.setenv("HSBENCH_THREADS", "many")
    assert run("solve-phases", "--config", path, "--out", tmp_path / "out") == 2


# -- solve-phases / verify-phases -------------------------------------------------


def test_solve_phases_writes_loadable_file(tmp_path):
    path = write_config(tmp_path, "cfg.json", {"t": 1.0, "d": 6, "tol": 2e-2, "seed": 7})
    out = tmp_path / "out"
    assert run("solve-phases", "--config", path, "--out", out) == 0
    seq = qsp.read_phase_file(out / "phases.json")
    assert seq.convention == qsp.CIRCUIT
    assert seq.degree == 3
    assert seq.sup_error <= 2e-2
    manifest = load_json(out / "manifest.json")
    assert manifest["artifacts"]["phases.json"] == sha256(out / "phases.json")
    assert load_json(out / "phases.json")["config_digest"] == manifest["config_digest"]


def test_solve_phases_qsp_convention_option(tmp_path):
    path = write_config(
        tmp_path, "cfg.json", {"t": 1.0, "d": 6, "tol": 2e-2, "convention": "QSP", "seed": 7}
    )
    out = tmp_path / "out"
    assert run("solve-phases", "--config", path, "--out", out) == 0
    seq = qsp.read_phase_file(out / "phases.json")
    assert seq.convention == qsp.QSP and seq.degree == 6


def test_unattainable_tolerance_exits_4(tmp_path):
    path = write_config(
        tmp_path, "cfg.json", {"t": 1.0, "d": 2, "tol": 1e-12, "restarts": 0, "seed": 3}
    )
    out = tmp_path / "out"
    assert run("solve-phases", "--config", path, "--out", out) == 4
    assert load_json(out / "manifest.json")["status"] == "convergence-failure"


def test_verify_phases_reproduces_stored_error(tmp_path):
    bundled = qsp.bundled_phase_sets()[0]
    phase_path = tmp_path / "bundled.json"
    qsp.write_phase_file(phase_path, bundled)
    cfg = write_config(tmp_path, "cfg.json", {"phase_file": str(phase_path), "seed": 1})
    out = tmp_path / "out"
    assert run("verify-phases", "--config", cfg, "--out", out) == 0
    report = load_json(out / "verify_report.json")
    assert report["stored_sup_error"] == pytest.approx(bundled.sup_error)
    assert report["measured_sup_error"] == pytest.approx(bundled.sup_error, rel=0.05)


def test_verify_phases_missing_file_is_config_error(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"phase_file": "/nowhere/p.json", "seed": 1})
    assert run("verify-phases", "--config", cfg, "--out", tmp_path / "out") == 2


# -- ques -------------------------------------------------------------------------


def test_ques_noiseless_grid(tmp_path):
    cfg = write_config(
        tmp_path, "cfg.json", {**QUES_BASE, "n_values": [2, 3], "instances": 3}
    )
    out = tmp_path / "out"
    assert run("ques", "--config", cfg, "--out", out) == 0
    report = load_json(out / "ques_report.json")
    assert len(report["cells"]) == 2
    for cell in report["cells"]:
        assert 1.0 - 2.0 * cell["sup_error"] <= cell["mean"] <= 1.0 + 1e-12
        assert cell["ci95"] >= 0.0
        assert len(cell["per_instance"]) == 3
    lines = (out / "ques_heatmap.csv").read_text().splitlines()
    assert lines[0] == f"# config={report['config_digest']}"
    assert lines[1] == "n,deg6"
    assert [row.split(",")[0] for row in lines[2:]] == ["2", "3"]


def test_ques_artifacts_identical_across_thread_counts(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {**QUES_BASE, "r2": 1e-3, "instances": 5})
    out1, out4 = tmp_path / "t1", tmp_path / "t4"
    assert run("ques", "--config", cfg, "--out", out1, "--threads", 1) == 0
    assert run("ques", "--config", cfg, "--out", out4, "--threads", 4) == 0
    for name in ("ques_report.json", "ques_heatmap.csv"):
        assert (out1 / name).read_bytes() == (out4 / name).read_bytes()
    a = load_json(out1 / "manifest.json")
    b = load_json(out4 / "manifest.json")
    assert a["artifacts"] == b["artifacts"]
    assert a["config_digest"] == b["config_digest"]


def test_ques_noisy_mean_tracks_reference(tmp_path):
    cfg = write_config(
        tmp_path, "cfg.json", {**QUES_BASE, "r2": 2e-3, "instances": 6, "shots": 500}
    )
    out = tmp_path / "out"
    assert run("ques", "--config", cfg, "--out", out) == 0
    cell = load_json(out / "ques_report.json")["cells"][0]
    # depth 10 on 3 qubits: g1=15, g2=8, 3 queries each way
    expected = (1.0 - 2e-4) ** (6 * 16) * (1.0 - 2e-3) ** (6 * 8)
    assert cell["alpha_ques"] == pytest.approx(expected, abs=0.12)


# -- benchmark --------------------------------------------------------------------


def test_benchmark_table_rows(tmp_path):
    cfg = write_config(
        tmp_path,
        "cfg.json",
        {
            "n": 2,
            "degrees": [6],
            "r2_values": [0.0, 2e-3],
            "t": 1.0,
            "tol": 2e-2,
            "instances": 4,
            "shots": 300,
            "depth": 10,
            "seed": 23,
        },
    )
    out = tmp_path / "out"
    assert run("benchmark", "--config", cfg, "--out", out) == 0
    lines = (out / "fidelity_table.csv").read_text().splitlines()
    assert lines[1] == "r2,estimate,deg6"
    estimates = [row.split(",")[1] for row in lines[2:]]
    assert estimates == ["ques", "sxes", "ref", "ques", "sxes", "ref"]
    report = load_json(out / "benchmark_report.json")
    clean, noisy = report["cells"]
    assert clean["alpha_ref"] == 1.0
    assert clean["alpha_ques"] == pytest.approx(1.0, abs=0.05)
    assert 0.0 < noisy["alpha_ref"] < 1.0
    for cell in report["cells"]:
        for key in ("alpha_ques", "alpha_sxes", "alpha_sxes_se", "alpha_ref"):
            assert key in cell


# -- haar-convergence -------------------------------------------------------------


def test_haar_convergence_rows_and_normalization(tmp_path):
    cfg = write_config(
        tmp_path,
        "cfg.json",
        {
            "qubits": 3,
            "couplings": ["full", "linear"],
            "depths": [6, 24],
            "instances": 25,
            "seed": 5,
        },
    )
    out = tmp_path / "out"
    assert run("haar-convergence", "--config", cfg, "--out", out) == 0
    lines = (out / "haar_convergence.csv").read_text().splitlines()
    assert len(lines) == 2 + 4
    rows = [line.split(",") for line in lines[2:]]
    assert [(r[0], r[1]) for r in rows] == [
        ("full", "6"),
        ("full", "24"),
        ("linear", "6"),
        ("linear", "24"),
    ]
    for r in rows:
        values = np.array([float(v) for v in r[3:]])
        assert np.all(np.isfinite(values)) and np.all(values > 0.0)
        assert float(r[4]) == pytest.approx(1.0, abs=1e-10)  # first moment is exact
    deep_full = next(r for r in rows if r[0] == "full" and r[1] == "24")
    assert float(deep_full[3]) == pytest.approx(1.0, abs=0.1)


def test_haar_convergence_quotes_comma_in_coupling_name(tmp_path):
    cfg = write_config(
        tmp_path,
        "cfg.json",
        {"qubits": 4, "couplings": ["grid(2,2)"], "depths": [8], "instances": 5, "seed": 6},
    )
    out = tmp_path / "out"
    assert run("haar-convergence", "--config", cfg, "--out", out) == 0
    lines = (out / "haar_convergence.csv").read_text().splitlines()
    assert lines[2].startswith('"grid(2,2)",8,')
    row = next(csv.reader([lines[2]]))
    assert row[0] == "grid(2,2)" and row[1] == "8" and len(row) == 9


# -- supremacy --------------------------------------------------------------------


def test_supremacy_curve_and_report(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"n": 2, "t_points": 380, "seed": 11})
    out = tmp_path / "out"
    assert run("supremacy", "--config", cfg, "--out", out) == 0
    report = load_json(out / "supremacy_report.json")
    assert report["bessel_prediction"] == pytest.approx(4.8097, abs=1e-3)
    assert report["t_threshold"] is None or 0.5 < report["t_threshold"] < 8.0
    meta, rows = read_curve_file(out / "supremacy_curve.csv")
    assert meta["config"] == report["config_digest"]
    assert meta["n"] == "2"
    assert rows.shape == (380, 5)


# -- topt-mc ----------------------------------------------------------------------


def test_topt_mc_grid_and_exact_time_zero(tmp_path):
    cfg = write_config(
        tmp_path, "cfg.json", {"n": 2, "samples": 16, "t_points": 9, "seed": 8}
    )
    out = tmp_path / "out"
    assert run("topt-mc", "--config", cfg, "--out", out) == 0
    lines = (out / "topt_mc.csv").read_text().splitlines()
    assert lines[1] == "t,mean_p0,se_p0,mean_amp_sq,bessel"
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    assert rows.shape == (9, 5)
    assert rows[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert rows[0, 4] == 1.0
    assert np.all(rows[:, 1] >= 0.0) and np.all(rows[:, 4] >= 0.0)


def test_topt_mc_capacity_guard(tmp_path):
    cfg = write_config(
        tmp_path, "cfg.json", {"n": 13, "samples": 4, "t_points": 5, "seed": 2}
    )
    out = tmp_path / "out"
    assert run("topt-mc", "--config", cfg, "--out", out) == 3
    assert load_json(out / "manifest.json")["status"] == "capacity-error"


# -- manifest ----------------------------------------------------------------------


def test_manifest_links_every_artifact(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", QUES_BASE)
    out = tmp_path / "out"
    assert run("ques", "--config", cfg, "--out", out) == 0
    manifest = load_json(out / "manifest.json")
    assert set(manifest["artifacts"]) == {"ques_report.json", "ques_heatmap.csv"}
    for name, digest in manifest["artifacts"].items():
        assert digest == sha256(out / name)
    assert manifest["version"]
    assert manifest["wall_clock_s"] >= 0.0
    assert "simulate" in manifest["stages"]
    report = load_json(out / "ques_report.json")
    assert report["config_digest"] == manifest["config_digest"]
