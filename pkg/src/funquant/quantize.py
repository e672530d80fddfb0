"""Solvers for self-consistent sets and principal points.

``lloyd`` alternates nearest-point assignment with domain-mean updates on
sample matrices, with k-means++ style seeding, multiple restarts and
farthest-point re-seeding of empty domains.  ``univariate_principal_points``
is the one-dimensional fixed-point solver driven by exact cell moments of a
law, used both for the closed-form two-point solution along the leading
eigendirection and for the scale-free quantization constant ``g``.

Assignment ties go to the lowest index, so runs are reproducible; indices
are 0-based throughout.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDirectionError, InsufficientDataError, ShapeError, UsageError
from .laws import UnivariateLaw
from .models import EllipticalModel
from ._io import write_json


@dataclass(frozen=True)
class PointSet:
    """An ordered set of k candidate points in coefficient space."""

    points: np.ndarray
    collapsed: bool = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ShapeError(f"points must form a non-empty (k, d) matrix, got shape {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        collapsed = False
        if pts.shape[0] > 1:
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            collapsed = bool(dist[np.triu_indices(pts.shape[0], k=1)].min() < 1e-10)
        object.__setattr__(self, "collapsed", collapsed)

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class AttractionAssignment:
    """Nearest-point labels (0-based) and per-domain counts."""

    labels: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class LloydReport:
    iterations: int
    final_mse: float
    self_consistency_residual: float
    restarts_used: int
    converged: bool
    mse_history: tuple[float, ...] = ()


def _sq_distances(samples: np.ndarray, points: np.ndarray) -> np.ndarray:
    diff = samples[:, None, :] - points[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def min_distance(v, w: PointSet) -> tuple[float, int]:
    """Distance from v to its nearest point and that point's (0-based) index.

    Ties resolve to the lowest index.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (w.d,):
        raise ShapeError(f"vector must have shape ({w.d},), got {v.shape}")
    d2 = _sq_distances(v[None, :], w.points)[0]
    idx = int(d2.argmin())
    return float(np.sqrt(d2[idx])), idx


def assign(samples: np.ndarray, w: PointSet) -> AttractionAssignment:
    """Domain-of-attraction labels for every sample row."""
    samples = _check_samples(samples, w.d)
    labels = _sq_distances(samples, w.points).argmin(axis=1)
    counts = np.bincount(labels, minlength=w.k)
    return AttractionAssignment(labels=labels, counts=counts)


def empirical_mse(samples: np.ndarray, w: PointSet) -> float:
    """Average squared distance to the nearest point of the set."""
    samples = _check_samples(samples, w.d)
    return float(_sq_distances(samples, w.points).min(axis=1).mean())


def self_consistency_residual(samples: np.ndarray, w: PointSet) -> float:
    """max_j || mean(samples in domain j) - y_j ||.

    An empty domain is reported as ``inf`` rather than silently skipped.
    """
    samples = _check_samples(samples, w.d)
    labels = _sq_distances(samples, w.points).argmin(axis=1)
    worst = 0.0
    for j in range(w.k):
        mask = labels == j
        if not mask.any():
            return float("inf")
        worst = max(worst, float(np.linalg.norm(samples[mask].mean(axis=0) - w.points[j])))
    return worst


def quantizer_variable(samples: np.ndarray, w: PointSet) -> np.ndarray:
    """The nearest-point quantizer: row j maps to its assigned point."""
    samples = _check_samples(samples, w.d)
    labels = _sq_distances(samples, w.points).argmin(axis=1)
    return w.points[labels]


def _check_samples(samples, d: int | None = None) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ShapeError(f"samples must be a 2-d matrix, got shape {samples.shape}")
    if d is not None and samples.shape[1] != d:
        raise ShapeError(f"samples have dimension {samples.shape[1]}, point set has {d}")
    return samples


def _kmeanspp_init(samples: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = samples.shape[0]
    chosen = np.zeros(n, dtype=bool)
    first = int(rng.integers(n))
    chosen[first] = True
    centers = [samples[first]]
    d2 = ((samples - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(np.flatnonzero(~chosen)[0])
        chosen[idx] = True
        centers.append(samples[idx])
        d2 = np.minimum(d2, ((samples - samples[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd_once(samples, k, rng, tol, max_iter, init_points):
    n = samples.shape[0]
    points = _kmeanspp_init(samples, k, rng) if init_points is None else np.array(init_points, dtype=float)
    mse_history = []
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        d2 = _sq_distances(samples, points)
        labels = d2.argmin(axis=1)
        mse_history.append(float(d2[np.arange(n), labels].mean()))
        new_points = points.copy()
        empty = []
        for j in range(k):
            mask = labels == j
            if mask.any():
                new_points[j] = samples[mask].mean(axis=0)
            else:
                empty.append(j)
        for j in empty:
            # re-seed to the sample farthest from the current set; keeps k fixed
            far = _sq_distances(samples, new_points).min(axis=1)
            new_points[j] = samples[int(far.argmax())]
        shift = float(np.linalg.norm(new_points - points, axis=1).max())
        points = new_points
        if shift < tol:
            converged = True
            break
    final_mse = empirical_mse(samples, PointSet(points))
    mse_history.append(final_mse)
    return points, final_mse, iterations, converged, tuple(mse_history)


def lloyd(
    samples: np.ndarray,
    k: int,
    init="kmeans++",
    tol: float = 1e-8,
    max_iter: int = 300,
    restarts: int = 10,
    seed: int = 0,
    jobs: int = 1,
) -> tuple[PointSet, LloydReport]:
    """Alternate assignment and domain means until the point shift is below tol.

    ``init`` is either ``"kmeans++"`` (seeded squared-distance sampling,
    one independent stream per restart) or an explicit (k, d) array of
    starting points, in which case a single run is performed.  Empty
    domains re-seed their point to the farthest sample.  The restart with
    the lowest final mean squared error wins; ties go to the lowest
    restart index, so the result does not depend on ``jobs``.
    """
    samples = _check_samples(samples)
    n = samples.shape[0]
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if n < k:
        raise InsufficientDataError(f"need at least k={k} samples, got {n}")
    if not tol > 0:
        raise UsageError(f"tol must be positive, got {tol}")

    if isinstance(init, str):
        if init != "kmeans++":
            raise UsageError(f"unknown init {init!r}; expected 'kmeans++' or an array of points")
        if restarts < 1:
            raise UsageError(f"restarts must be >= 1, got {restarts}")
        # [seed, 1] keeps restart streams disjoint from sampling streams
        # derived from the same seed.
        streams = np.random.SeedSequence([seed, 1]).spawn(restarts)

        def run(stream):
            gen = np.random.Generator(np.random.Philox(stream))
            return _lloyd_once(samples, k, gen, tol, max_iter, None)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(run, streams))
        else:
            results = [run(ss) for ss in streams]
        best = min(range(restarts), key=lambda r: (results[r][1], r))
        points, final_mse, iterations, converged, history = results[best]
        restarts_used = restarts
    else:
        init_points = np.asarray(init, dtype=float)
        if init_points.shape != (k, samples.shape[1]):
            raise ShapeError(
                f"initial points must have shape ({k}, {samples.shape[1]}), got {init_points.shape}"
            )
        points, final_mse, iterations, converged, history = _lloyd_once(
            samples, k, None, tol, max_iter, init_points
        )
        restarts_used = 1

    pointset = PointSet(points)
    report = LloydReport(
        iterations=iterations,
        final_mse=final_mse,
        self_consistency_residual=self_consistency_residual(samples, pointset),
        restarts_used=restarts_used,
        converged=converged,
        mse_history=history,
    )
    return pointset, report


def univariate_principal_points(
    law: UnivariateLaw,
    k: int,
    tol: float | None = None,
    max_iter: int = 500,
) -> np.ndarray:
    """Best k-point quantizer of a one-dimensional law, by fixed-point iteration.

    Cell boundaries are midpoints of adjacent points and each point moves
    to its cell's conditional mean (from the law's exact cell moments).
    Several deterministic quantile-spread starts are run to convergence and
    the one with the lowest expected squared distance wins.
    """
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if k == 1:
        return np.array([law.mean])
    scale = float(np.sqrt(law.variance))
    if not scale > 0:
        raise UsageError("law has zero variance; quantizer is degenerate")
    if tol is None:
        tol = 1e-12 * max(scale, 1e-12)

    base = (np.arange(k) + 0.5) / k
    eps = 1e-4
    level_sets = []
    for c in (1.0, 0.5, 0.25):
        level_sets.append(0.5 + (base - 0.5) * c)
    for shift in (0.1 / k, -0.1 / k):
        level_sets.append(np.clip(base + shift, eps, 1.0 - eps))

    best_points = None
    best_objective = np.inf
    for levels in level_sets:
        y = np.array([law.quantile(p) for p in levels])
        y.sort()
        for _ in range(max_iter):
            bounds = np.concatenate(([-np.inf], (y[1:] + y[:-1]) / 2.0, [np.inf]))
            new = y.copy()
            for j in range(k):
                m0, m1, _ = law.cell_moments(bounds[j], bounds[j + 1])
                if m0 > 1e-300:
                    new[j] = m1 / m0
            shift = np.abs(new - y).max()
            y = new
            if shift < tol:
                break
        objective = law.expected_sq_distance(y)
        if best_points is None or objective < best_objective * (1.0 - 1e-14):
            best_objective = objective
            best_points = y
    return np.sort(best_points)


def closed_form_two_points(model: EllipticalModel) -> PointSet:
    """The two-point solution: mean offset along the leading eigendirection.

    The offsets are the two principal points of the projection law onto the
    top eigendirection (scale sqrt(lambda_1) times the mixture projection).
    If the two leading eigenvalues coincide the direction is not unique; a
    warning is issued and the canonical first basis direction is used.
    """
    lam1 = float(model.lam[0])
    if lam1 <= 0:
        raise DegenerateDirectionError("model has a zero top eigenvalue; no spread to quantize")
    if model.d > 1 and lam1 - float(model.lam[1]) < 1e-10 * lam1:
        warnings.warn(
            "top eigendirection is not unique (tied leading eigenvalues); "
            "returning the canonical first basis direction",
            RuntimeWarning,
            stacklevel=2,
        )
    law = model.mixture.projection_law(float(np.sqrt(lam1)))
    gammas = univariate_principal_points(law, 2)
    direction = np.zeros(model.d)
    direction[0] = 1.0
    points = model.mu + gammas[:, None] * direction
    return PointSet(points)


def g_constant(model: EllipticalModel) -> float:
    """Scale-free two-point quantization constant of the projection law.

    The ratio (best two-point expected squared distance) / variance of any
    one-dimensional projection; independent of the direction because the
    standardized projection law is.  Equals 1 - 2/pi for gaussian models.
    """
    if float(model.lam.sum()) <= 0:
        raise DegenerateDirectionError("model has an all-zero spectrum")
    law = model.mixture.standardized_law()
    points = univariate_principal_points(law, 2)
    return float(law.expected_sq_distance(points) / law.variance)


def write_pointset_json(path, w: PointSet, mse: float, residual: float) -> None:
    write_json(path, {
        "k": w.k,
        "points": w.points.tolist(),
        "mse": float(mse),
        "residual": float(residual),
    })


def read_pointset_json(path) -> dict:
    with open(path) as f:
        return json.load(f)
