"""Dimensionality reduction front end: plain PCA scores and the
batch-residualized variant that removes linear association with a design
matrix before any embedding is attempted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .linalg import ensure_matrix, lstsq, truncated_svd


@dataclass(frozen=True)
class ReducedData:
    """k-dimensional scores plus the variance fraction each direction carries."""

    scores: np.ndarray  # n x k
    k: int
    explained_variance: np.ndarray  # k fractions of total (centered) variance


def _prepare(X, center, scale):
    X = ensure_matrix(X, "X")
    if X.shape[0] < 2:
        raise ValidationError("need at least 2 rows")
    out = X
    if center:
        out = out - out.mean(axis=0)
    if scale:
        sd = out.std(axis=0, ddof=1)
        if np.any(sd == 0):
            bad = int(np.flatnonzero(sd == 0)[0])
            raise ValidationError(f"cannot scale constant column {bad}")
        out = out / sd
    if not np.any(out):
        raise ValidationError("matrix is constant: no variance left after centering")
    return out


def pca_reduce(X, k, center=True, scale=False, seed=0):
    """Truncated PCA scores of X (optionally centered/scaled columns)."""
    Xp = _prepare(X, center, scale)
    if not 1 <= k <= min(Xp.shape):
        raise DomainError(f"k={k} outside valid range [1, {min(Xp.shape)}]")
    total = float(np.sum(Xp * Xp))
    res = truncated_svd(Xp, k, seed=seed)
    scores = res.U * res.S
    return ReducedData(scores=scores, k=k, explained_variance=res.S**2 / total)


def residualized_reduce(X, Z, k, center=True, scale=False, seed=0):
    """PCA scores of X with linear association to the design Z regressed out.

    Z is the batch design (BatchDesign or raw n x b array); an intercept
    column is prepended before the regression so group mean differences are
    removed rather than forcing the scores through the origin.  The returned
    scores are orthogonal to the column span of [1 | Z].
    """
    Zarr = ensure_matrix(getattr(Z, "Z", Z), "Z")
    Xp = _prepare(X, center, scale)
    if Zarr.shape[0] != Xp.shape[0]:
        raise ValidationError(
            f"row mismatch: X has {Xp.shape[0]} rows, Z has {Zarr.shape[0]}"
        )
    if not 1 <= k <= min(Xp.shape):
        raise DomainError(f"k={k} outside valid range [1, {min(Xp.shape)}]")
    total = float(np.sum(Xp * Xp))
    res = truncated_svd(Xp, k, seed=seed)
    scores = res.U * res.S
    Z1 = np.column_stack([np.ones(Zarr.shape[0]), Zarr])
    adjusted = scores - Z1 @ lstsq(Z1, scores)
    return ReducedData(scores=adjusted, k=k, explained_variance=res.S**2 / total)
