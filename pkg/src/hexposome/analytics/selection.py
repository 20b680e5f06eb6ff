"""Silhouette scoring and the HDBSCAN hyperparameter grid search."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import DataError
from .hdbscan import ClusterModel, core_distances, fit_from_mst, mutual_reachability_mst
from .pca import _as_matrix

log = logging.getLogger(__name__)

DEFAULT_LATTICE = tuple(range(5, 101, 5))


def _distance_matrix(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def silhouette(X, labels, *, distances: np.ndarray | None = None) -> float | None:
    """Mean silhouette over non-noise points; ``None`` when fewer than two clusters remain.

    Noise points (label -1) are left out entirely. A point alone in its cluster
    scores 0.
    """
    labels = np.asarray(labels)
    keep = labels != -1
    clusters = np.unique(labels[keep])
    if len(clusters) < 2:
        return None
    if distances is None:
        Xk = _as_matrix(X)[keep]
        D = _distance_matrix(Xk)
    else:
        D = distances[np.ix_(keep, keep)]
    lab = labels[keep]
    onehot = (lab[:, None] == clusters[None, :]).astype(float)
    sums = D @ onehot  # distance from each point to all members of each cluster
    counts = onehot.sum(axis=0)
    own = np.searchsorted(clusters, lab)
    own_count = counts[own]
    a = np.where(own_count > 1, sums[np.arange(len(lab)), own] / np.maximum(own_count - 1, 1), 0.0)
    means = sums / counts
    means[np.arange(len(lab)), own] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where((own_count > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(s.mean())


def grid_search_hdbscan(X, lattice=DEFAULT_LATTICE) -> tuple[tuple[int, int], ClusterModel, float]:
    """Try every (min_cluster_size, min_samples) pair and keep the best silhouette.

    Ties go to the smaller min_cluster_size, then the smaller min_samples.
    Returns ``((min_cluster_size, min_samples), model, score)``.
    """
    values = sorted(set(int(v) for v in lattice))
    if not values:
        raise DataError("empty hyperparameter range")
    X = _as_matrix(X)
    n = len(X)
    if n <= values[-1]:
        raise DataError(f"need more than {values[-1]} points for this range, got {n}")
    D = _distance_matrix(X)
    best = None
    for ms in values:
        edges = mutual_reachability_mst(X, ms, core_distances(X, ms))
        for mcs in values:
            if mcs < 2:
                continue
            model = fit_from_mst(edges, n, mcs, ms)
            score = silhouette(X, model.labels, distances=D)
            log.debug("mcs=%d ms=%d clusters=%d silhouette=%s", mcs, ms, model.n_clusters, score)
            if score is None:
                continue
            key = (-score, mcs, ms)
            if best is None or key < best[0]:
                best = (key, model, score)
    if best is None:
        raise DataError("no valid clustering: every setting left fewer than two clusters")
    (_, mcs, ms), model, score = best
    return (mcs, ms), model, score
