"""Empirical moments in coefficient space and covariance eigenanalysis.

The covariance uses the 1/n convention so that the mean squared deviation
from the sample mean equals the trace exactly.  Eigenpairs are reported in
descending order with a deterministic sign convention, negative eigenvalues
from rounding are clipped to zero, and nearly equal adjacent eigenvalues
are flagged so downstream span comparisons can treat them as a block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ShapeError
from ._io import write_json


@dataclass(frozen=True)
class CovarianceEstimate:
    """Sample mean, covariance and its eigendecomposition."""

    mean_hat: np.ndarray
    cov_hat: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    n: int
    degenerate_pairs: tuple[tuple[int, int], ...] = field(default=())

    @property
    def d(self) -> int:
        return self.mean_hat.shape[0]

    def top_eigvecs(self, q: int) -> np.ndarray:
        """Columns spanning the leading q-dimensional eigenspace."""
        return self.eigvecs[:, :q]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # First coefficient with magnitude above 1e-12 made positive, per column.
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        idx = np.flatnonzero(np.abs(vecs[:, j]) > 1e-12)
        if idx.size and vecs[idx[0], j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def estimate(samples: np.ndarray) -> CovarianceEstimate:
    """Moment estimates from an (n, d) coefficient matrix.

    Requires n >= 2.  The eigendecomposition is of the symmetrized
    covariance; eigenvalues below zero (rounding noise, the matrix is a
    Gram matrix) are clipped to 0.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ShapeError(f"samples must be a 2-d matrix, got shape {samples.shape}")
    n = samples.shape[0]
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {n}")
    mean_hat = samples.mean(axis=0)
    centered = samples - mean_hat
    cov_hat = (centered.T @ centered) / n
    cov_hat = 0.5 * (cov_hat + cov_hat.T)
    w, v = np.linalg.eigh(cov_hat)
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    v = _fix_signs(v[:, order])
    gaps = w[:-1] - w[1:]
    degenerate = tuple(
        (i, i + 1) for i, g in enumerate(gaps) if w[0] > 0 and g < 1e-8 * w[0]
    )
    return CovarianceEstimate(
        mean_hat=mean_hat, cov_hat=cov_hat, eigvals=w, eigvecs=v, n=n,
        degenerate_pairs=degenerate,
    )


def principal_angles(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of two orthonormal frames.

    Angles are ``arccos`` of the singular values of ``u.T @ w`` (descending
    cosines, so ascending angles), each in [0, pi/2].  Small angles are
    recovered through the sine formulation, since ``arccos`` alone cannot
    resolve angles below ~1e-8.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if u.ndim != 2 or w.ndim != 2 or u.shape[0] != w.shape[0]:
        raise ShapeError(f"frames must share their ambient dimension, got {u.shape} and {w.shape}")
    for name, frame in (("first", u), ("second", w)):
        gram_dev = np.abs(frame.T @ frame - np.eye(frame.shape[1])).max()
        if gram_dev > 1e-8:
            raise ShapeError(f"{name} frame columns are not orthonormal (deviation {gram_dev:.2e})")
    cross = u.T @ w
    cosines = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    residual_svals = np.linalg.svd(w - u @ cross, compute_uv=False)
    sines = np.sort(np.clip(residual_svals, 0.0, 1.0))[: cosines.size]
    angles = np.arccos(cosines)  # ascending: cosines come out descending
    small = cosines**2 > 0.5
    angles[small] = np.arcsin(sines[small])
    return angles


def trace_tail(obj, from_index: int) -> float:
    """Sum of eigenvalues with 1-based index >= ``from_index``.

    Accepts a model (its shape spectrum), a covariance estimate (its
    eigenvalues) or a raw spectrum array.  ``from_index = d + 1`` gives 0:
    the tail beyond the truncation level is zero by construction.
    """
    if hasattr(obj, "lam"):
        spectrum = np.asarray(obj.lam, dtype=float)
    elif hasattr(obj, "eigvals"):
        spectrum = np.asarray(obj.eigvals, dtype=float)
    else:
        spectrum = np.asarray(obj, dtype=float)
    d = spectrum.shape[0]
    if not 1 <= from_index <= d + 1:
        raise ShapeError(f"from_index must be in [1, {d + 1}], got {from_index}")
    return float(spectrum[from_index - 1 :].sum())


def write_estimate_json(path, est: CovarianceEstimate) -> None:
    write_json(path, {
        "mean": est.mean_hat.tolist(),
        "eigvals": est.eigvals.tolist(),
        "eigvecs": est.eigvecs.tolist(),
        "n": est.n,
    })


def read_estimate_json(path) -> dict:
    with open(path) as f:
        return json.load(f)
