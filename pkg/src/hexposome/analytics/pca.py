"""Standardization and principal component analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError


def _as_matrix(X, min_rows=2) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.size == 0:
        raise DataError("expected a non-empty 2-D matrix")
    if X.shape[0] < min_rows:
        raise DataError(f"need at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise DataError("matrix contains NaN or infinite values; drop or impute them first")
    return X


def standardize(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise z-scores with the population std; constant columns become zeros.

    Returns ``(Z, mean, std)``.
    """
    X = _as_matrix(X)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    Z = np.where(std > 0, (X - mean) / safe, 0.0)
    return Z, mean, std


@dataclass(frozen=True)
class PCAModel:
    means: np.ndarray
    components: np.ndarray  # (d, d), rows are unit eigenvectors, descending eigenvalue
    eigenvalues: np.ndarray
    explained_variance_ratio: np.ndarray

    def transform(self, X, k: int | None = None) -> np.ndarray:
        return pca_transform(self, X, k)


def pca_fit(X) -> PCAModel:
    """Eigendecomposition of the sample covariance (divisor n - 1).

    Each component's sign is chosen so its largest-magnitude entry is positive.
    """
    X = _as_matrix(X)
    n, _ = X.shape
    means = X.mean(axis=0)
    Xc = X - means
    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evals = np.clip(evals[order], 0.0, None)
    comps = evecs[:, order].T.copy()
    for row in comps:
        j = np.argmax(np.abs(row))
        if row[j] < 0:
            row *= -1.0
    total = evals.sum()
    if not total > 0:
        raise DataError("data has zero total variance")
    return PCAModel(means, comps, evals, evals / total)


def pca_transform(model: PCAModel, X, k: int | None = None) -> np.ndarray:
    d = len(model.means)
    k = d if k is None else k
    if not 1 <= k <= d:
        raise DataError(f"k={k} outside 1..{d}")
    X = _as_matrix(X, min_rows=1)
    if X.shape[1] != d:
        raise DataError(f"expected {d} columns, got {X.shape[1]}")
    return (X - model.means) @ model.components[:k].T


def pca_select(ratios, mode: str = "threshold", t: float = 0.9) -> int:
    """Number of components to keep.

    ``threshold``: smallest k whose cumulative ratio reaches ``t``.
    ``elbow``: the scree point (k, ratio_k), 1-based, farthest from the chord
    joining the first and last points; ties go to the smaller k.
    """
    r = np.asarray(ratios, dtype=float)
    if r.size == 0:
        raise DataError("no explained-variance ratios")
    if mode == "threshold":
        if not 0 < t <= 1:
            raise DataError(f"threshold must be in (0, 1], got {t}")
        cum = np.cumsum(r)
        # cumulative sums like 0.7 + 0.2 land one ulp under 0.9
        hit = np.flatnonzero(cum >= t - 1e-12)
        return int(hit[0]) + 1 if hit.size else len(r)
    if mode == "elbow":
        d = len(r)
        if d < 3:
            return 1
        x = np.arange(1, d + 1, dtype=float)
        x0, y0, x1, y1 = 1.0, r[0], float(d), r[-1]
        dist = np.abs((y1 - y0) * x - (x1 - x0) * r + x1 * y0 - y1 * x0) / np.hypot(y1 - y0, x1 - x0)
        return int(np.argmax(dist)) + 1
    raise DataError(f"unknown selection mode {mode!r}")
