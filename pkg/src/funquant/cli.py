"""Command-line driver: JSON scenario configs in, artifact files out.

Subcommands: ``simulate``, ``estimate``, ``kmeans``, ``closed-form``,
``verify``, ``report``.  A single JSON config plus the seed determines a
run completely; re-running the same config and seed writes byte-identical
numeric outputs, whatever ``--jobs`` is.  Exit codes: 0 success, 1 failed
verification checks, 2 config/schema problems, 3 numerical singularities.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .basis import FOURIER, SYNTHETIC, Basis, make_basis, BasisSpec, write_curve_csv
from .checks import ALL_CHECKS, reference_suite
from .errors import ConfigError, FunquantError, SingularityError
from .estimates import estimate, write_estimate_json
from .models import EllipticalModel, covariance_operator, model_from_dict, sample, write_samples_csv
from .quantize import closed_form_two_points, g_constant, lloyd, write_pointset_json
from ._io import atomic_write, write_json

TASKS = ("simulate", "estimate", "kmeans", "closed-form", "verify", "report")

_EXIT_OK = 0
_EXIT_CHECK_FAILED = 1
_EXIT_CONFIG = 2
_EXIT_SINGULAR = 3


@dataclass
class Scenario:
    task: str
    out: Path
    seed: int
    model: EllipticalModel | None = None
    n: int | None = None
    k: int | None = None
    restarts: int = 10
    tol: float = 1e-8
    max_iter: int = 300
    checks: list[str] | None = None
    inputs: list[str] | None = None
    basis: Basis | None = None
    jobs: int = 1


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    _expect(isinstance(payload, dict), f"{path}: top-level config must be an object")
    return payload


def _parse_basis(cfg: dict) -> Basis | None:
    raw = cfg.get("basis")
    if raw is None:
        return None
    _expect(isinstance(raw, dict), "config.basis: must be an object")
    family = raw.get("family", FOURIER)
    _expect(family in (FOURIER, SYNTHETIC), f"config.basis.family: unknown family {family!r}")
    dimension = raw.get("dimension", cfg["model"]["d"] if "model" in cfg else None)
    _expect(isinstance(dimension, int), "config.basis.dimension: required integer")
    if "grid" in raw:
        grid = raw["grid"]
    elif "grid_points" in raw:
        m = raw["grid_points"]
        _expect(isinstance(m, int) and m >= 2, "config.basis.grid_points: integer >= 2 required")
        grid = np.linspace(0.0, 1.0, m).tolist()
    else:
        grid = None
    return make_basis(BasisSpec(family=family, dimension=dimension, grid=grid))


def _parse_scenario(task: str, cfg: dict, args) -> Scenario:
    cfg_task = cfg.get("task")
    if cfg_task is not None and cfg_task != task:
        raise ConfigError(f"config.task: config says {cfg_task!r} but the {task!r} command was invoked")

    seed = cfg.get("seed", 0)
    if "model" in cfg and isinstance(cfg["model"], dict) and "seed" in cfg["model"]:
        seed = cfg["model"]["seed"]
    if "seed" in cfg:
        seed = cfg["seed"]
    if args.seed is not None:
        seed = args.seed
    _expect(isinstance(seed, int) and seed >= 0, f"config.seed: nonnegative integer required, got {seed!r}")

    out = Path(args.out) if args.out else Path(cfg.get("out", "results"))
    scenario = Scenario(task=task, out=out, seed=seed, jobs=max(1, args.jobs))

    if task in ("simulate", "estimate", "kmeans", "closed-form"):
        _expect("model" in cfg, "config.model: required for this task")
        scenario.model = model_from_dict(cfg["model"])
        scenario.basis = _parse_basis(cfg)
        if scenario.basis is not None:
            _expect(
                scenario.basis.dimension == scenario.model.d,
                "config.basis.dimension: must match config.model.d",
            )

    if task in ("simulate", "estimate", "kmeans"):
        n = cfg.get("n")
        _expect(isinstance(n, int) and n >= 1, f"config.n: positive integer required, got {n!r}")
        scenario.n = n

    if task == "kmeans":
        k = cfg.get("k")
        _expect(isinstance(k, int) and k >= 1, f"config.k: positive integer required, got {k!r}")
        _expect(k <= scenario.n, f"config.k: k={k} exceeds n={scenario.n}")
        scenario.k = k
        scenario.restarts = cfg.get("restarts", 10)
        _expect(
            isinstance(scenario.restarts, int) and scenario.restarts >= 1,
            "config.restarts: positive integer required",
        )
        scenario.tol = float(cfg.get("tol", 1e-8))
        _expect(scenario.tol > 0, "config.tol: must be positive")
        scenario.max_iter = int(cfg.get("max_iter", 300))
        _expect(scenario.max_iter >= 1, "config.max_iter: must be >= 1")

    if task == "verify":
        checks = cfg.get("checks")
        if checks is not None:
            _expect(
                isinstance(checks, list) and all(isinstance(c, str) for c in checks),
                "config.checks: must be a list of check names",
            )
            unknown = [c for c in checks if c not in ALL_CHECKS]
            _expect(not unknown, f"config.checks: unknown names {unknown}; valid: {list(ALL_CHECKS)}")
        scenario.checks = checks
        scenario.n = cfg.get("n", 200_000)
        _expect(
            isinstance(scenario.n, int) and 1 <= scenario.n <= 200_000,
            "config.n: integer in [1, 200000] required for verify",
        )

    if task == "report":
        inputs = cfg.get("inputs")
        _expect(
            isinstance(inputs, list) and all(isinstance(p, str) for p in inputs),
            "config.inputs: a list of result file paths is required",
        )
        scenario.inputs = inputs

    return scenario


def _write_manifest(scenario: Scenario, cfg_text: str) -> None:
    digest = hashlib.sha256(cfg_text.encode()).hexdigest()
    write_json(scenario.out / f"{scenario.task.replace('-', '_')}_manifest.json", {
        "task": scenario.task,
        "config_sha256": digest,
        "seed": scenario.seed,
        "version": __version__,
    })


def _export_curves(scenario: Scenario, points: np.ndarray) -> list[Path]:
    paths = []
    if scenario.basis is None:
        return paths
    for i, row in enumerate(points):
        path = scenario.out / f"point_{i + 1}.csv"
        write_curve_csv(path, scenario.basis, row)
        paths.append(path)
    return paths


def _run_simulate(scenario: Scenario) -> int:
    draws = sample(scenario.model, scenario.n, scenario.seed)
    path = scenario.out / "samples.csv"
    write_samples_csv(path, draws)
    print(f"wrote {path}")
    return _EXIT_OK


def _run_estimate(scenario: Scenario) -> int:
    draws = sample(scenario.model, scenario.n, scenario.seed)
    est = estimate(draws)
    path = scenario.out / "estimate.json"
    write_estimate_json(path, est)
    print(f"wrote {path}")
    return _EXIT_OK


def _run_kmeans(scenario: Scenario) -> int:
    draws = sample(scenario.model, scenario.n, scenario.seed)
    points, report = lloyd(
        draws,
        scenario.k,
        tol=scenario.tol,
        max_iter=scenario.max_iter,
        restarts=scenario.restarts,
        seed=scenario.seed,
        jobs=scenario.jobs,
    )
    path = scenario.out / "pointset.json"
    write_pointset_json(path, points, report.final_mse, report.self_consistency_residual)
    print(f"wrote {path} (iterations={report.iterations}, converged={report.converged})")
    for curve in _export_curves(scenario, points.points):
        print(f"wrote {curve}")
    return _EXIT_OK


def _run_closed_form(scenario: Scenario) -> int:
    points = closed_form_two_points(scenario.model)
    g = g_constant(scenario.model)
    gamma = covariance_operator(scenario.model)
    mse = float(np.trace(gamma)) - (1.0 - g) * float(gamma[0, 0])
    path = scenario.out / "pointset.json"
    write_pointset_json(path, points, mse, 0.0)
    print(f"wrote {path} (analytic mse={mse:.6g}, g={g:.6g})")
    for curve in _export_curves(scenario, points.points):
        print(f"wrote {curve}")
    return _EXIT_OK


def _run_verify(scenario: Scenario) -> int:
    reports = reference_suite(
        seed=scenario.seed, n=scenario.n, checks=scenario.checks, jobs=scenario.jobs
    )
    path = scenario.out / "verification.json"
    write_json(path, [r.to_dict() for r in reports])
    print(f"wrote {path}")
    failed = 0
    for r in reports:
        if r.flags:
            status = "FLAGGED"
        elif r.passed:
            status = "PASS"
        else:
            status = "FAIL"
            failed += 1
        worst = ""
        if r.residuals:
            key = max(r.residuals, key=lambda k: _ratio(r.residuals[k], r.tolerances[k]))
            worst = f" {key}={r.residuals[key]:.3g} (tol {r.tolerances[key]:.3g})"
        print(f"[{status}] {r.name} [{r.tolerance_class}] {r.params.get('model', '')}{worst} ({r.runtime:.2f}s)")
    return _EXIT_CHECK_FAILED if failed else _EXIT_OK


def _ratio(value: float, tol: float) -> float:
    if tol == 0:
        return float("inf") if value > 0 else 0.0
    return value / tol


def _report_rows(inputs: list[str]) -> list[dict]:
    rows = []
    for path in inputs:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"{path}: input file does not exist")
        with open(p) as f:
            payload = json.load(f)
        if not isinstance(payload, list):
            raise ConfigError(f"{path}: expected a JSON array of verification reports")
        for rec in payload:
            params = rec.get("params", {})
            residuals = rec.get("residuals", {})
            tolerances = rec.get("tolerances", {})
            if residuals:
                worst = max(residuals, key=lambda k: _ratio(residuals[k], tolerances.get(k, 0.0)))
                residual = residuals[worst]
                tol = tolerances.get(worst, "")
            else:
                residual = ""
                tol = ""
            passed = "flagged" if rec.get("flags") else str(bool(rec.get("passed"))).lower()
            rows.append({
                "name": rec.get("name", ""),
                "model": params.get("model", params.get("law", "")),
                "n": params.get("n", ""),
                "seed": params.get("seed", ""),
                "residual": residual,
                "tol": tol,
                "pass": passed,
            })
    if len(inputs) > 1:
        rows.sort(key=lambda r: (r["name"], str(r["seed"])))
    return rows


_COLUMNS = ("name", "model", "n", "seed", "residual", "tol", "pass")


def _run_report(scenario: Scenario) -> int:
    rows = _report_rows(scenario.inputs)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for row in rows:
        writer.writerow([row[c] for c in _COLUMNS])
    csv_path = scenario.out / "report.csv"
    atomic_write(csv_path, buffer.getvalue())

    md_lines = ["| " + " | ".join(_COLUMNS) + " |", "|" + "---|" * len(_COLUMNS)]
    for row in rows:
        md_lines.append("| " + " | ".join(str(row[c]) for c in _COLUMNS) + " |")
    md_path = scenario.out / "report.md"
    atomic_write(md_path, "\n".join(md_lines) + "\n")
    print(f"wrote {csv_path}")
    print(f"wrote {md_path}")
    return _EXIT_OK


_RUNNERS = {
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "kmeans": _run_kmeans,
    "closed-form": _run_closed_form,
    "verify": _run_verify,
    "report": _run_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funquant",
        description="Simulate elliptical random functions and compute their principal points.",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task from a JSON config")
        p.add_argument("--config", required=True, help="path to the scenario config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for restarts/checks")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        scenario = _parse_scenario(args.task, cfg, args)
        try:
            scenario.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"config.out: cannot create {scenario.out} ({exc})") from exc
        code = _RUNNERS[args.task](scenario)
        manifest_cfg = dict(cfg)
        manifest_cfg["seed"] = scenario.seed
        _write_manifest(scenario, json.dumps(manifest_cfg, sort_keys=True))
        return code
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_SINGULAR
    except (ConfigError, FunquantError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
