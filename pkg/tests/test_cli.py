import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from funquant import SingularityError
from funquant.cli import main

MODEL = {
    "d": 3,
    "mu": [0.0, 0.0, 0.0],
    "lambda": [4.0, 1.0, 0.25],
    "mixture": {"kind": "gaussian"},
}


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "funquant", *args],
        capture_output=True,
        text=True,
        cwd=Path(__file__).parent.parent,
    )


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2))
    return path


def read_all(out_dir: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir()) if p.is_file()}


class TestSimulate:
    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, {"model": MODEL, "task": "simulate", "n": 10, "seed": 1})
        out = tmp_path / "out"
        first = run_cli("simulate", "--config", str(cfg), "--out", str(out))
        assert first.returncode == 0, first.stderr
        snapshot = read_all(out)
        second = run_cli("simulate", "--config", str(cfg), "--out", str(out))
        assert second.returncode == 0
        assert read_all(out) == snapshot
        assert "samples.csv" in snapshot
        assert "simulate_manifest.json" in snapshot

    def test_seed_override_changes_output(self, tmp_path):
        cfg = write_config(tmp_path, {"model": MODEL, "task": "simulate", "n": 10, "seed": 1})
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli("simulate", "--config", str(cfg), "--out", str(out_a)).returncode == 0
        assert (
            run_cli("simulate", "--config", str(cfg), "--out", str(out_b), "--seed", "2").returncode
            == 0
        )
        assert (out_a / "samples.csv").read_bytes() != (out_b / "samples.csv").read_bytes()
        manifest = json.loads((out_b / "simulate_manifest.json").read_text())
        assert manifest["seed"] == 2

    def test_samples_shape(self, tmp_path):
        cfg = write_config(tmp_path, {"model": MODEL, "task": "simulate", "n": 7, "seed": 3})
        out = tmp_path / "out"
        run_cli("simulate", "--config", str(cfg), "--out", str(out))
        lines = (out / "samples.csv").read_text().strip().splitlines()
        assert lines[0] == "c1,c2,c3"
        assert len(lines) == 8


class TestEstimate:
    def test_valid_json(self, tmp_path):
        cfg = write_config(tmp_path, {"model": MODEL, "task": "estimate", "n": 5000, "seed": 4})
        out = tmp_path / "out"
        assert run_cli("estimate", "--config", str(cfg), "--out", str(out)).returncode == 0
        payload = json.loads((out / "estimate.json").read_text())
        assert payload["n"] == 5000
        assert len(payload["eigvals"]) == 3
        assert payload["eigvals"] == sorted(payload["eigvals"], reverse=True)


class TestKmeans:
    def test_recovers_two_point_solution(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {"model": MODEL, "task": "kmeans", "n": 30_000, "k": 2, "restarts": 5,
             "tol": 1e-10, "seed": 5},
        )
        out = tmp_path / "out"
        assert run_cli("kmeans", "--config", str(cfg), "--out", str(out)).returncode == 0
        payload = json.loads((out / "pointset.json").read_text())
        points = np.array(payload["points"])
        assert payload["k"] == 2
        np.testing.assert_allclose(
            np.sort(points[:, 0]), [-1.59577, 1.59577], atol=0.08
        )
        assert payload["residual"] < 1e-7

    def test_jobs_do_not_change_bytes(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {"model": MODEL, "task": "kmeans", "n": 5000, "k": 3, "restarts": 6,
             "tol": 1e-9, "seed": 6},
        )
        out1, out4 = tmp_path / "j1", tmp_path / "j4"
        assert run_cli("kmeans", "--config", str(cfg), "--out", str(out1), "--jobs", "1").returncode == 0
        assert run_cli("kmeans", "--config", str(cfg), "--out", str(out4), "--jobs", "4").returncode == 0
        assert (out1 / "pointset.json").read_bytes() == (out4 / "pointset.json").read_bytes()

    def test_curve_export_with_fourier_basis(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {"model": MODEL, "task": "kmeans", "n": 2000, "k": 2, "seed": 7,
             "basis": {"family": "fourier-on-[0,1]", "grid_points": 33}},
        )
        out = tmp_path / "out"
        assert run_cli("kmeans", "--config", str(cfg), "--out", str(out)).returncode == 0
        for name in ("point_1.csv", "point_2.csv"):
            lines = (out / name).read_text().strip().splitlines()
            assert lines[0] == "t,value"
            assert len(lines) == 34

    def test_k_larger_than_n_rejected(self, tmp_path):
        cfg = write_config(
            tmp_path, {"model": MODEL, "task": "kmeans", "n": 3, "k": 5, "seed": 0}
        )
        result = run_cli("kmeans", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert result.returncode == 2
        assert "config.k" in result.stderr


class TestClosedForm:
    def test_gaussian_points(self, tmp_path):
        cfg = write_config(tmp_path, {"model": MODEL, "task": "closed-form", "seed": 0})
        out = tmp_path / "out"
        assert run_cli("closed-form", "--config", str(cfg), "--out", str(out)).returncode == 0
        payload = json.loads((out / "pointset.json").read_text())
        points = np.array(payload["points"])
        np.testing.assert_allclose(np.sort(points[:, 0]), [-1.59577, 1.59577], atol=1e-4)
        np.testing.assert_allclose(points[:, 1:], 0.0, atol=1e-12)
        # analytic objective: trace - (1 - g) * lambda_1
        g = 1.0 - 2.0 / np.pi
        assert payload["mse"] == pytest.approx(5.25 - (1.0 - g) * 4.0, rel=1e-6)
        assert payload["residual"] == 0.0


class TestVerify:
    def test_small_suite_passes_and_is_deterministic(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {"task": "verify", "checks": ["dimension_bound", "ratio_invariance"],
             "n": 5000, "seed": 8},
        )
        out1, out2 = tmp_path / "v1", tmp_path / "v2"
        r1 = run_cli("verify", "--config", str(cfg), "--out", str(out1))
        assert r1.returncode == 0, r1.stderr
        assert "[PASS]" in r1.stdout
        r2 = run_cli("verify", "--config", str(cfg), "--out", str(out2), "--jobs", "3")
        assert r2.returncode == 0
        assert (out1 / "verification.json").read_bytes() == (out2 / "verification.json").read_bytes()
        payload = json.loads((out1 / "verification.json").read_text())
        assert all("runtime" not in rec for rec in payload)

    def test_failing_check_exits_nonzero(self, tmp_path):
        # 60 samples cannot pin a regression slope to 5 percent
        cfg = write_config(
            tmp_path, {"task": "verify", "checks": ["conditional_linearity"], "n": 60, "seed": 9}
        )
        result = run_cli("verify", "--config", str(cfg), "--out", str(tmp_path / "v"))
        assert result.returncode == 1
        assert "[FAIL]" in result.stdout

    def test_full_check_list_on_reference_models_exits_zero(self, tmp_path):
        cfg = write_config(tmp_path, {"task": "verify", "n": 50_000, "seed": 0})
        out = tmp_path / "full"
        result = run_cli("verify", "--config", str(cfg), "--out", str(out))
        assert result.returncode == 0, result.stdout + result.stderr
        payload = json.loads((out / "verification.json").read_text())
        assert len(payload) > 30
        assert all(rec["passed"] or rec["flags"] for rec in payload)


class TestReport:
    def test_header_only_for_empty_inputs(self, tmp_path):
        cfg = write_config(tmp_path, {"task": "report", "inputs": []})
        out = tmp_path / "out"
        assert run_cli("report", "--config", str(cfg), "--out", str(out)).returncode == 0
        assert (out / "report.csv").read_text() == "name,model,n,seed,residual,tol,pass\n"

    def test_rows_follow_file_order_for_single_input(self, tmp_path):
        vcfg = write_config(
            tmp_path,
            {"task": "verify", "checks": ["dimension_bound", "convex_hull"], "n": 3000, "seed": 10},
            name="verify.json.cfg",
        )
        vout = tmp_path / "vout"
        assert run_cli("verify", "--config", str(vcfg), "--out", str(vout)).returncode == 0
        rcfg = write_config(
            tmp_path,
            {"task": "report", "inputs": [str(vout / "verification.json")]},
            name="report.cfg",
        )
        out = tmp_path / "rout"
        assert run_cli("report", "--config", str(rcfg), "--out", str(out)).returncode == 0
        lines = (out / "report.csv").read_text().strip().splitlines()
        recs = json.loads((vout / "verification.json").read_text())
        assert [line.split(",")[0] for line in lines[1:]] == [r["name"] for r in recs]
        assert (out / "report.md").read_text().startswith("| name | model |")

    def test_mixed_inputs_sorted_by_name_and_seed(self, tmp_path):
        paths = []
        for seed in (21, 20):
            vcfg = write_config(
                tmp_path,
                {"task": "verify", "checks": ["ratio_invariance", "dimension_bound"],
                 "n": 2000, "seed": seed},
                name=f"v{seed}.cfg",
            )
            vout = tmp_path / f"vout{seed}"
            assert run_cli("verify", "--config", str(vcfg), "--out", str(vout)).returncode == 0
            paths.append(str(vout / "verification.json"))
        rcfg = write_config(tmp_path, {"task": "report", "inputs": paths}, name="r.cfg")
        out = tmp_path / "rout"
        assert run_cli("report", "--config", str(rcfg), "--out", str(out)).returncode == 0
        import csv as csv_module

        with open(out / "report.csv") as f:
            rows = list(csv_module.reader(f))[1:]
        keys = [(row[0], row[3]) for row in rows]
        assert keys == sorted(keys)

    def test_missing_input_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, {"task": "report", "inputs": ["nowhere.json"]})
        result = run_cli("report", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert result.returncode == 2
        assert "does not exist" in result.stderr


class TestSchemaErrors:
    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "model": [,]\n}')
        result = run_cli("simulate", "--config", str(path), "--out", str(tmp_path / "o"))
        assert result.returncode == 2
        assert "bad.json:2" in result.stderr

    def test_missing_model(self, tmp_path):
        cfg = write_config(tmp_path, {"task": "simulate", "n": 5, "seed": 0})
        result = run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert result.returncode == 2
        assert "config.model" in result.stderr

    def test_task_mismatch(self, tmp_path):
        cfg = write_config(tmp_path, {"model": MODEL, "task": "simulate", "n": 5, "seed": 0})
        result = run_cli("kmeans", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert result.returncode == 2

    def test_increasing_lambda_rejected_with_path(self, tmp_path):
        bad = dict(MODEL, **{"lambda": [1.0, 2.0, 3.0]})
        cfg = write_config(tmp_path, {"model": bad, "task": "simulate", "n": 5, "seed": 0})
        result = run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert result.returncode == 2
        assert "model" in result.stderr


def test_singularity_maps_to_exit_3(tmp_path, monkeypatch):
    import funquant.cli as cli_module

    cfg = write_config(tmp_path, {"model": MODEL, "task": "simulate", "n": 5, "seed": 0})

    def boom(scenario):
        raise SingularityError("covariance block is singular")

    monkeypatch.setitem(cli_module._RUNNERS, "simulate", boom)
    code = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 3


def test_console_script_entry_point():
    result = run_cli("simulate", "--config", "/nonexistent.json")
    assert result.returncode == 2
