"""Executable property checks for the identities behind the solvers.

Each check measures residuals against stated tolerances and returns a
structured :class:`VerificationReport`; a failing check reports
``passed=False`` instead of raising, so suites can aggregate.  Tolerances
fall into three classes, recorded per report: ``exact-algebra`` (1e-10
scale, identities that hold up to rounding), ``quadrature`` (1e-6..1e-4,
limited by the one-dimensional solver), and ``monte-carlo`` (standard-error
multiples or relative percentages, limited by sampling).

Checks whose preconditions cannot be decided from data (for example span
comparisons under a nearly degenerate spectrum) come back flagged rather
than failed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .basis import SubspaceSplit, random_orthogonal
from .errors import ShapeError, UsageError
from .laws import NormalMixtureLaw, UniformLaw, UnivariateLaw
from .models import EllipticalModel, ScaleMixture, conditional_slope, sample
from .quantize import (
    PointSet,
    assign,
    empirical_mse,
    g_constant,
    lloyd,
    self_consistency_residual,
    univariate_principal_points,
)

EXACT = "exact-algebra"
QUADRATURE = "quadrature"
MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one check: residuals, tolerances, pass flag, runtime."""

    name: str
    params: dict
    residuals: dict
    tolerances: dict
    passed: bool
    tolerance_class: str
    flags: tuple[str, ...] = ()
    runtime: float = 0.0

    def to_dict(self) -> dict:
        # runtime deliberately left out: exported reports must be
        # byte-identical across reruns of the same config and seed.
        return {
            "name": self.name,
            "params": self.params,
            "residuals": self.residuals,
            "tolerances": self.tolerances,
            "passed": self.passed,
            "tolerance_class": self.tolerance_class,
            "flags": list(self.flags),
        }


def _finish(name, params, residuals, tolerances, tol_class, flags, started) -> VerificationReport:
    passed = all(
        (v <= tolerances[key]) if not math.isnan(v) else False
        for key, v in residuals.items()
    )
    return VerificationReport(
        name=name,
        params=params,
        residuals={k: float(v) for k, v in residuals.items()},
        tolerances={k: float(v) for k, v in tolerances.items()},
        passed=passed,
        tolerance_class=tol_class,
        flags=tuple(flags),
        runtime=time.perf_counter() - started,
    )


def simplex_fit(points: np.ndarray, target: np.ndarray, x0=None) -> tuple[np.ndarray, float]:
    """Least-squares combination of rows of ``points`` matching ``target``,
    with weights constrained to the probability simplex."""
    points = np.asarray(points, dtype=float)
    target = np.asarray(target, dtype=float)
    k = points.shape[0]
    if x0 is None:
        x0 = np.full(k, 1.0 / k)

    def objective(alpha):
        r = points.T @ alpha - target
        return float(r @ r)

    def gradient(alpha):
        return 2.0 * points @ (points.T @ alpha - target)

    res = minimize(
        objective,
        x0,
        jac=gradient,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * k,
        constraints=[{"type": "eq", "fun": lambda a: a.sum() - 1.0, "jac": lambda a: np.ones(k)}],
        options={"maxiter": 200, "ftol": 1e-18},
    )
    alpha = np.clip(res.x, 0.0, None)
    alpha = alpha / alpha.sum()
    return alpha, float(np.linalg.norm(points.T @ alpha - target))


def check_convex_hull(samples: np.ndarray, w: PointSet, params: dict | None = None) -> VerificationReport:
    """The sample mean is a convex combination of a fixed point's points."""
    started = time.perf_counter()
    samples = np.asarray(samples, dtype=float)
    mean = samples.mean(axis=0)
    counts = assign(samples, w).counts
    _, residual = simplex_fit(w.points, mean, x0=counts / counts.sum())
    trace = float(((samples - mean) ** 2).sum(axis=1).mean())
    tol = 1e-3 * math.sqrt(trace)
    p = {"n": samples.shape[0], "k": w.k, **(params or {})}
    return _finish(
        "convex_hull", p, {"simplex_residual": residual}, {"simplex_residual": tol},
        MONTE_CARLO, (), started,
    )


def check_unitary_equivariance(
    samples: np.ndarray,
    w: PointSet,
    nu: np.ndarray,
    rho: float,
    u_mat: np.ndarray,
    fixed_point_tol: float = 1e-8,
    params: dict | None = None,
) -> VerificationReport:
    """Similarity transforms x -> nu + rho U x carry fixed points to fixed points.

    The mean squared error scales by exactly rho^2, the self-consistency
    residual by |rho|, and re-running the solver from the transformed set
    leaves it in place.
    """
    started = time.perf_counter()
    if rho == 0:
        raise UsageError("rho must be nonzero")
    u_mat = np.asarray(u_mat, dtype=float)
    dev = np.abs(u_mat.T @ u_mat - np.eye(u_mat.shape[0])).max()
    if dev > 1e-10:
        raise ShapeError(f"transform matrix is not orthogonal (deviation {dev:.2e})")
    samples = np.asarray(samples, dtype=float)
    nu = np.asarray(nu, dtype=float)

    samples2 = nu + rho * (samples @ u_mat.T)
    w2 = PointSet(nu + rho * (w.points @ u_mat.T))

    mse1 = empirical_mse(samples, w)
    mse2 = empirical_mse(samples2, w2)
    res1 = self_consistency_residual(samples, w)
    res2 = self_consistency_residual(samples2, w2)

    refit, _ = lloyd(samples2, w.k, init=w2.points, tol=fixed_point_tol, max_iter=200)
    movement = float(np.linalg.norm(refit.points - w2.points, axis=1).max())

    residuals = {
        "mse_scaling": abs(mse2 / (rho**2 * mse1) - 1.0),
        "residual_scaling": abs(res2 - abs(rho) * res1),
        "lloyd_movement": movement,
    }
    tolerances = {
        "mse_scaling": 1e-10,
        "residual_scaling": 1e-10,
        "lloyd_movement": max(fixed_point_tol, 10.0 * res2),
    }
    p = {"n": samples.shape[0], "k": w.k, "rho": rho, **(params or {})}
    return _finish("unitary_equivariance", p, residuals, tolerances, EXACT, (), started)


def check_kernel_orthogonality(
    model: EllipticalModel,
    k: int,
    n: int,
    seed: int,
    tol_kernel: float = 1e-8,
    restarts: int = 5,
) -> VerificationReport:
    """Fixed points carry no weight on zero-eigenvalue coordinates."""
    started = time.perf_counter()
    kernel = np.flatnonzero(model.lam == 0.0)
    if kernel.size == 0:
        raise UsageError("model has no zero eigenvalues; nothing to check")
    draws = sample(model, n, seed)
    points, _ = lloyd(draws, k, tol=1e-10, restarts=restarts, seed=seed)
    residual = float(np.abs(points.points[:, kernel]).max())
    p = {"model": model.label(), "n": n, "seed": seed, "k": k}
    return _finish(
        "kernel_orthogonality", p, {"kernel_magnitude": residual},
        {"kernel_magnitude": tol_kernel}, EXACT, (), started,
    )


def span_rank(
    svals: np.ndarray, cutoff: float = 1e-6, window: tuple[float, float] = (1e-7, 1e-5)
) -> tuple[int, bool]:
    """Rank of a span from singular values, with an ambiguity verdict.

    The rank counts singular values above ``cutoff`` times the largest one;
    a value falling inside ``window`` (relative) sits too close to the
    cutoff to call, so the result is marked ambiguous.
    """
    svals = np.asarray(svals, dtype=float)
    if svals.size == 0 or svals[0] <= 0:
        return 0, False
    ratios = svals / svals[0]
    rank = int((ratios > cutoff).sum())
    ambiguous = bool(np.any((ratios > window[0]) & (ratios < window[1])))
    return rank, ambiguous


def check_eigen_span(
    model: EllipticalModel,
    k: int,
    q_expected: int,
    n: int,
    seed: int,
    rotation: np.ndarray | None = None,
    restarts: int = 10,
    angle_tol: float = 0.1,
    gap_tol: float = 1e-3,
) -> VerificationReport:
    """Centered fixed points span leading eigendirections.

    The span's rank is read off the singular values of the centered point
    matrix (cutoff 1e-6 of the top one); its principal angles against the
    top-q model eigendirections must stay below ``angle_tol``.  Models
    without a clear spectral gap at q, and runs where a singular value sits
    near the rank cutoff, are flagged indeterminate instead of failed.
    """
    started = time.perf_counter()
    p = {"model": model.label(), "n": n, "seed": seed, "k": k, "q_expected": q_expected}
    lam = model.lam
    top = float(lam[0]) if lam[0] > 0 else 1.0
    gap = float(lam[q_expected - 1] - lam[q_expected]) / top if q_expected < lam.size else float("inf")
    if gap < gap_tol:
        return _finish(
            "eigen_span", p, {}, {}, MONTE_CARLO, ("degenerate-spectrum",), started
        )

    draws = sample(model, n, seed)
    eigvecs = np.eye(model.d)
    if rotation is not None:
        rotation = np.asarray(rotation, dtype=float)
        draws = draws @ rotation.T
        eigvecs = rotation

    points, _ = lloyd(draws, k, tol=1e-10, restarts=restarts, seed=seed)
    centered = points.points - draws.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    rank, ambiguous = span_rank(svals)
    flags = ["ambiguous-rank"] if ambiguous else []
    if rank == 0 or flags:
        return _finish("eigen_span", p, {}, {}, MONTE_CARLO, tuple(flags) or ("zero-span",), started)

    _, _, vt = np.linalg.svd(centered)
    span = vt[:rank].T
    target = eigvecs[:, :rank]
    cosines = np.linalg.svd(span.T @ target, compute_uv=False)
    max_angle = float(np.arccos(np.clip(cosines, 0.0, 1.0)).max())
    residuals = {"max_angle": max_angle, "rank_deviation": float(abs(rank - q_expected))}
    tolerances = {"max_angle": angle_tol, "rank_deviation": 0.0}
    return _finish("eigen_span", p, residuals, tolerances, MONTE_CARLO, (), started)


def check_dimension_bound(
    samples: np.ndarray, k: int, seed: int = 0, restarts: int = 10, params: dict | None = None
) -> VerificationReport:
    """Centered best-restart output spans at most k-1 dimensions."""
    started = time.perf_counter()
    samples = np.asarray(samples, dtype=float)
    points, _ = lloyd(samples, k, tol=1e-10, restarts=restarts, seed=seed)
    mean = samples.mean(axis=0)
    centered = points.points - mean
    svals = np.linalg.svd(centered, compute_uv=False)
    scale = math.sqrt(float(((samples - mean) ** 2).sum(axis=1).mean()))
    cutoff = 1e-6 * max(float(svals[0]), scale)
    rank = int((svals > cutoff).sum())
    residuals = {"rank_excess": float(max(0, rank - (k - 1)))}
    tolerances = {"rank_excess": 0.0}
    p = {"n": samples.shape[0], "k": k, "seed": seed, **(params or {})}
    return _finish("dimension_bound", p, residuals, tolerances, EXACT, (), started)


def check_projection_self_consistency(
    samples: np.ndarray, w: PointSet, tol: float = 1e-8, params: dict | None = None
) -> VerificationReport:
    """Projecting onto the span of a fixed point preserves the fixed point.

    Distances to in-span points decompose orthogonally, so assignments are
    unchanged and the projected residual cannot exceed the original one.
    """
    started = time.perf_counter()
    samples = np.asarray(samples, dtype=float)
    _, svals, vt = np.linalg.svd(w.points)
    rank = int((svals > 1e-9 * svals[0]).sum()) if svals[0] > 0 else 0
    if rank == 0:
        return _finish(
            "projection_self_consistency", {"n": samples.shape[0], "k": w.k, **(params or {})},
            {}, {}, EXACT, ("zero-span",), started,
        )
    basis_rows = vt[:rank]
    proj_samples = samples @ basis_rows.T
    proj_points = PointSet(w.points @ basis_rows.T)
    res_before = self_consistency_residual(samples, w)
    res_after = self_consistency_residual(proj_samples, proj_points)
    residuals = {"projected_residual": res_after}
    tolerances = {"projected_residual": max(tol, res_before * (1.0 + 1e-9) + 1e-12)}
    p = {"n": samples.shape[0], "k": w.k, "span_dim": rank, **(params or {})}
    return _finish("projection_self_consistency", p, residuals, tolerances, EXACT, (), started)


def check_conditional_linearity(
    model: EllipticalModel,
    split: SubspaceSplit,
    n: int,
    seed: int,
    rel_tol: float = 0.05,
    se_mult: float = 4.0,
    bins: int = 10,
) -> VerificationReport:
    """Least-squares slope of the complement block on the subspace block
    matches the analytic regression operator; binned conditional means sit
    on the analytic line."""
    started = time.perf_counter()
    slope = conditional_slope(model, split)
    draws = sample(model, n, seed)
    w1 = draws @ split.u_basis.T
    w2 = draws @ split.complement.T
    w1c = w1 - w1.mean(axis=0)
    w2c = w2 - w2.mean(axis=0)
    solution, _, _, _ = np.linalg.lstsq(w1c, w2c, rcond=None)
    slope_hat = solution.T

    gram_inv = np.linalg.inv(w1c.T @ w1c)
    resid = w2c - w1c @ solution
    # sandwich standard errors: scale-mixture responses are heteroskedastic
    # in the regressor, so the plain OLS variance would understate
    se = np.empty_like(slope_hat)
    for i in range(resid.shape[1]):
        meat = w1c.T @ (w1c * resid[:, i : i + 1] ** 2)
        se[i] = np.sqrt(np.diag(gram_inv @ meat @ gram_inv))

    residuals = {}
    tolerances = {}
    norm_b = float(np.linalg.norm(slope))
    if norm_b > 1e-10:
        residuals["slope_rel_frobenius"] = float(np.linalg.norm(slope_hat - slope)) / norm_b
        tolerances["slope_rel_frobenius"] = rel_tol
    else:
        # analytic slope is zero (up to rounding): the estimate must be noise
        residuals["slope_max_z"] = float(np.max(np.abs(slope_hat) / se))
        tolerances["slope_max_z"] = se_mult

    mu1 = split.u_basis @ model.mu
    mu2 = split.complement @ model.mu
    edges = np.quantile(w1[:, 0], np.linspace(0.0, 1.0, bins + 1))
    max_z = 0.0
    for b in range(bins):
        lo, hi = edges[b], edges[b + 1]
        mask = (w1[:, 0] >= lo) & (w1[:, 0] <= hi if b == bins - 1 else w1[:, 0] < hi)
        count = int(mask.sum())
        if count < 10:
            continue
        pred = mu2 + slope @ (w1[mask].mean(axis=0) - mu1)
        observed = w2[mask].mean(axis=0)
        bin_se = w2[mask].std(axis=0, ddof=1) / math.sqrt(count)
        max_z = max(max_z, float(np.max(np.abs(observed - pred) / bin_se)))
    residuals["binned_mean_max_z"] = max_z
    tolerances["binned_mean_max_z"] = se_mult

    p = {"model": model.label(), "n": n, "seed": seed, "q": split.q}
    return _finish("conditional_linearity", p, residuals, tolerances, MONTE_CARLO, (), started)


def check_ratio_invariance(
    law: UnivariateLaw, rhos, k: int, tol: float = 1e-6, label: str = ""
) -> VerificationReport:
    """The scale-free quantization ratio D(k)/Var is invariant under scaling."""
    started = time.perf_counter()
    rhos = [float(r) for r in rhos]
    if any(r == 0 for r in rhos):
        raise UsageError("scale factors must be nonzero")

    def ratio(one_law: UnivariateLaw) -> float:
        pts = univariate_principal_points(one_law, k)
        return one_law.expected_sq_distance(pts) / one_law.variance

    values = [ratio(law)] + [ratio(law.scaled(r)) for r in rhos]
    residuals = {"ratio_spread": float(max(values) - min(values))}
    tolerances = {"ratio_spread": tol}
    p = {"law": label or type(law).__name__, "k": k, "rhos": rhos}
    return _finish("ratio_invariance", p, residuals, tolerances, QUADRATURE, (), started)


def check_mse_identity(
    model: EllipticalModel,
    directions,
    n: int,
    seed: int,
    rel_tol: float = 0.02,
) -> VerificationReport:
    """Two-point quantization error along a unit direction a equals
    trace(Cov) - (1 - g) <a, Cov a>, minimized at the top eigendirection."""
    started = time.perf_counter()
    g = g_constant(model)
    ez2 = model.mixture.second_moment()
    trace_cov = ez2 * float(model.lam.sum())
    draws = sample(model, n, seed)

    residuals = {}
    tolerances = {}
    measured = []
    predicted = []
    for i, a in enumerate(directions):
        a = np.asarray(a, dtype=float)
        if abs(float(np.linalg.norm(a)) - 1.0) > 1e-8:
            raise UsageError(f"direction {i} is not unit norm")
        shape_var = float(a @ (model.lam * a))
        law = model.mixture.projection_law(math.sqrt(shape_var))
        offsets = univariate_principal_points(law, 2)
        points = PointSet(model.mu + offsets[:, None] * a)
        mse = empirical_mse(draws, points)
        pred = trace_cov - (1.0 - g) * ez2 * shape_var
        measured.append(mse)
        predicted.append(pred)
        residuals[f"identity_rel_error_{i}"] = abs(mse / pred - 1.0)
        tolerances[f"identity_rel_error_{i}"] = rel_tol
    residuals["argmin_mismatch"] = float(int(np.argmin(measured)) != int(np.argmin(predicted)))
    tolerances["argmin_mismatch"] = 0.0

    p = {"model": model.label(), "n": n, "seed": seed, "directions": len(measured), "g": g}
    return _finish("mse_identity", p, residuals, tolerances, MONTE_CARLO, (), started)


ALL_CHECKS = (
    "convex_hull",
    "unitary_equivariance",
    "kernel_orthogonality",
    "eigen_span",
    "dimension_bound",
    "projection_self_consistency",
    "conditional_linearity",
    "ratio_invariance",
    "mse_identity",
)


def reference_models() -> list[EllipticalModel]:
    """Gaussian and t5 mixtures over the three reference spectra."""
    spectra = [(4.0, 1.0, 0.25), (1.0, 1.0, 1.0), (1.0, 0.0)]
    mixtures = [ScaleMixture.gaussian(), ScaleMixture.student_t(5.0)]
    models = []
    for lam in spectra:
        for mixture in mixtures:
            models.append(EllipticalModel(mu=np.zeros(len(lam)), lam=np.array(lam), mixture=mixture))
    return models


def _rotated_split(d: int, q: int, seed: int) -> SubspaceSplit:
    return SubspaceSplit(u_basis=random_orthogonal(d, seed)[:q])


def reference_suite(
    seed: int = 0,
    n: int = 200_000,
    checks=None,
    jobs: int = 1,
) -> list[VerificationReport]:
    """Run the selected checks over the reference models.

    ``checks`` is a list of names from :data:`ALL_CHECKS` (default: all).
    Each check derives its own seeds from ``seed``, so runs are
    reproducible and independent of execution order.
    """
    selected = list(ALL_CHECKS) if checks is None else list(checks)
    unknown = [c for c in selected if c not in ALL_CHECKS]
    if unknown:
        raise UsageError(f"unknown checks: {unknown}; expected names from {ALL_CHECKS}")

    reports: list[VerificationReport] = []
    models = reference_models()
    n_mid = min(n, 50_000)

    def lloyd_fixture(model, k, draws_n, fixture_seed):
        draws = sample(model, draws_n, fixture_seed)
        points, _ = lloyd(draws, k, tol=1e-10, restarts=5, seed=fixture_seed, jobs=jobs)
        return draws, points

    for idx, model in enumerate(models):
        base = seed + 1000 * idx
        pinfo = {"model": model.label(), "seed": base}
        has_kernel = bool(np.any(model.lam == 0.0))
        gap_ok = model.lam[0] > 0 and (model.lam[0] - model.lam[1]) / model.lam[0] >= 1e-3 if model.d > 1 else True

        if "convex_hull" in selected:
            draws, points = lloyd_fixture(model, 3, n_mid, base + 1)
            reports.append(check_convex_hull(draws, points, params={**pinfo, "seed": base + 1}))
        if "dimension_bound" in selected:
            draws = sample(model, n_mid, base + 2)
            reports.append(
                check_dimension_bound(draws, 3, seed=base + 2, restarts=5, params=pinfo)
            )
        if "kernel_orthogonality" in selected and has_kernel:
            reports.append(check_kernel_orthogonality(model, 2, n_mid, base + 3))
        if "eigen_span" in selected:
            reports.append(check_eigen_span(model, 2, 1, min(n, 100_000), base + 4, restarts=5))
        if "projection_self_consistency" in selected and gap_ok:
            draws, points = lloyd_fixture(model, 2, n_mid, base + 5)
            reports.append(
                check_projection_self_consistency(draws, points, params={**pinfo, "seed": base + 5})
            )
        if "unitary_equivariance" in selected and gap_ok:
            draws, points = lloyd_fixture(model, 2, n_mid, base + 6)
            u_mat = random_orthogonal(model.d, base + 7)
            nu = np.linspace(0.5, -0.5, model.d)
            reports.append(
                check_unitary_equivariance(
                    draws, points, nu, 2.0, u_mat, params={**pinfo, "seed": base + 6}
                )
            )
        if "conditional_linearity" in selected and float(model.lam[-1]) > 0:
            split = _rotated_split(model.d, 1, base + 8)
            reports.append(check_conditional_linearity(model, split, n, base + 8))
        if "mse_identity" in selected and gap_ok and float(model.lam[1]) > 0:
            d = model.d
            e1 = np.eye(d)[0]
            e2 = np.eye(d)[1]
            mix = (e1 + e2) / math.sqrt(2.0)
            reports.append(check_mse_identity(model, [e1, e2, mix], n, base + 9))

    if "ratio_invariance" in selected:
        reports.append(
            check_ratio_invariance(
                NormalMixtureLaw(weights=(1.0,), scales=(1.0,)), [0.5, 2.0, 10.0], 2, label="normal"
            )
        )
        reports.append(
            check_ratio_invariance(UniformLaw(0.0, 1.0), [0.5, 2.0, 10.0], 3, label="uniform(0,1)")
        )
    return reports
