"""Exact O(n^2) HDBSCAN: core distances, Prim's MST over mutual reachability,
condensed tree, and excess-of-mass cluster extraction.

No spatial index is used; distances are computed row by row so memory stays O(n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .pca import _as_matrix

_BLOCK_ELEMENTS = 1 << 22  # floats per distance block


def _row_distances(X: np.ndarray, i: int) -> np.ndarray:
    diff = X - X[i]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def core_distances(X, min_samples: int) -> np.ndarray:
    """Distance to the ``min_samples``-th nearest neighbour, the point itself being the first."""
    X = _as_matrix(X, min_rows=1)
    n = len(X)
    if not 1 <= min_samples <= n:
        raise DataError(f"min_samples={min_samples} outside 1..{n}")
    out = np.empty(n)
    step = max(1, _BLOCK_ELEMENTS // (n * X.shape[1]))
    for start in range(0, n, step):
        block = X[start:start + step]
        diff = block[:, None, :] - X[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        out[start:start + len(block)] = np.partition(d, min_samples - 1, axis=1)[:, min_samples - 1]
    return out


def mutual_reachability_mst(X, min_samples: int, core: np.ndarray | None = None) -> np.ndarray:
    """Prim's algorithm on the implicit complete mutual-reachability graph.

    Returns an ``(n - 1, 3)`` array of ``(tree_vertex, new_vertex, weight)`` rows in
    the order vertices join the tree. Ties between candidate edges are broken by
    (weight, smaller endpoint, larger endpoint).
    """
    X = _as_matrix(X)
    n = len(X)
    if core is None:
        core = core_distances(X, min_samples)
    in_tree = np.zeros(n, dtype=bool)
    best_w = np.full(n, np.inf)
    best_u = np.full(n, -1, dtype=np.int64)
    idx = np.arange(n)
    edges = np.empty((n - 1, 3))
    current = 0
    in_tree[0] = True
    for step in range(n - 1):
        w = np.maximum(np.maximum(_row_distances(X, current), core), core[current])
        lo_new = np.minimum(idx, current)
        hi_new = np.maximum(idx, current)
        lo_old = np.minimum(idx, best_u)
        hi_old = np.maximum(idx, best_u)
        better = (w < best_w) | ((w == best_w) & (
            (lo_new < lo_old) | ((lo_new == lo_old) & (hi_new < hi_old))))
        better &= ~in_tree
        best_w[better] = w[better]
        best_u[better] = current
        out = np.flatnonzero(~in_tree)
        wmin = best_w[out].min()
        cand = out[best_w[out] == wmin]
        if len(cand) > 1:
            lo = np.minimum(cand, best_u[cand])
            hi = np.maximum(cand, best_u[cand])
            cand = cand[np.lexsort((hi, lo))]
        v = int(cand[0])
        edges[step] = (best_u[v], v, best_w[v])
        in_tree[v] = True
        current = v
    return edges


def _single_linkage(edges: np.ndarray, n: int) -> np.ndarray:
    """Merge MST edges in (weight, min vertex, max vertex) order; rows (left, right, dist, size)."""
    u = edges[:, 0].astype(np.int64)
    v = edges[:, 1].astype(np.int64)
    order = np.lexsort((np.maximum(u, v), np.minimum(u, v), edges[:, 2]))
    parent = np.arange(2 * n - 1)
    size = np.ones(2 * n - 1, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    out = np.empty((n - 1, 4))
    for k, e in enumerate(order):
        a, b = find(u[e]), find(v[e])
        node = n + k
        parent[a] = parent[b] = node
        size[node] = size[a] + size[b]
        out[k] = (a, b, edges[e, 2], size[node])
    return out


def _leaves(hierarchy: np.ndarray, node: int, n: int) -> list[int]:
    stack, out = [node], []
    while stack:
        x = stack.pop()
        if x < n:
            out.append(x)
        else:
            left, right = hierarchy[x - n, :2]
            stack.extend((int(right), int(left)))
    return out


def condense_tree(hierarchy: np.ndarray, n: int, min_cluster_size: int) -> np.ndarray:
    """Condensed tree rows ``(parent, child, lambda, size)``; clusters are numbered from n (root)."""
    root = 2 * n - 2
    relabel = {root: n}
    next_label = n + 1
    rows = []
    queue = [root]
    while queue:
        node = queue.pop(0)
        left, right, dist, _ = hierarchy[node - n]
        left, right = int(left), int(right)
        lam = 1.0 / dist if dist > 0 else np.inf
        sizes = [1 if c < n else int(hierarchy[c - n, 3]) for c in (left, right)]
        big = [s >= min_cluster_size for s in sizes]
        me = relabel[node]
        if all(big):
            for child, s in zip((left, right), sizes):
                relabel[child] = next_label
                rows.append((me, next_label, lam, s))
                next_label += 1
                if child >= n:
                    queue.append(child)
        else:
            for child, s, is_big in zip((left, right), sizes, big):
                if is_big:
                    relabel[child] = me
                    if child >= n:
                        queue.append(child)
                else:
                    rows.extend((me, leaf, lam, 1) for leaf in _leaves(hierarchy, child, n))
    return np.array(rows, dtype=float).reshape(-1, 4)


def _stabilities(tree: np.ndarray, n: int) -> dict[int, float]:
    parents = tree[:, 0].astype(np.int64)
    children = tree[:, 1].astype(np.int64)
    birth = {n: 0.0}
    for c, lam in zip(children, tree[:, 2]):
        if c >= n:
            birth[int(c)] = float(lam)
    stab = {c: 0.0 for c in birth}
    for p, lam, size in zip(parents, tree[:, 2], tree[:, 3]):
        b = birth[int(p)]
        if lam != b:
            stab[int(p)] += float((lam - b) * size)
    return stab


@dataclass
class ClusterModel:
    labels: np.ndarray
    min_cluster_size: int
    min_samples: int
    stabilities: dict = field(default_factory=dict)  # condensed-tree cluster id -> stability
    condensed_tree: np.ndarray = field(default_factory=lambda: np.empty((0, 4)))
    selected: list = field(default_factory=list)  # condensed-tree ids, in label order

    @property
    def n_clusters(self) -> int:
        return len(self.selected)


def _extract(tree: np.ndarray, n: int, mcs: int, ms: int) -> ClusterModel:
    stab = _stabilities(tree, n)
    raw = dict(stab)
    kids: dict[int, list[int]] = {c: [] for c in stab}
    parent_of = {}
    for p, c in tree[:, :2].astype(np.int64):
        if c >= n:
            kids[int(p)].append(int(c))
            parent_of[int(c)] = int(p)
    selected = {c: False for c in stab}
    for node in sorted(stab, reverse=True):
        if node == n:
            continue  # the root is never a cluster
        if not kids[node]:
            selected[node] = True
            continue
        sub = sum(stab[c] for c in kids[node])
        if stab[node] > sub:
            selected[node] = True
            stack = list(kids[node])
            while stack:
                c = stack.pop()
                selected[c] = False
                stack.extend(kids[c])
        else:
            stab[node] = sub
    chosen = [c for c, s in selected.items() if s]

    def owner(cluster: int):
        while cluster != n:
            if selected[cluster]:
                return cluster
            cluster = parent_of[cluster]
        return None

    labels_raw = np.full(n, -1, dtype=np.int64)
    members = {c: 0 for c in chosen}
    for p, c in tree[:, :2].astype(np.int64):
        if c < n:
            o = owner(int(p))
            if o is not None:
                labels_raw[c] = o
                members[o] += 1
    order = sorted(chosen, key=lambda c: (-members[c], c))
    remap = {c: i for i, c in enumerate(order)}
    labels = np.array([remap.get(int(x), -1) for x in labels_raw], dtype=np.int64)
    return ClusterModel(labels, mcs, ms, raw, tree, order)


def fit_from_mst(edges: np.ndarray, n: int, min_cluster_size: int, min_samples: int) -> ClusterModel:
    if n == 1 or (len(edges) and edges[:, 2].max() == 0.0):
        # zero mutual-reachability everywhere: one cluster of identical points
        return ClusterModel(np.zeros(n, dtype=np.int64), min_cluster_size, min_samples,
                            {n: np.inf}, np.empty((0, 4)), [n])
    hierarchy = _single_linkage(edges, n)
    tree = condense_tree(hierarchy, n, min_cluster_size)
    return _extract(tree, n, min_cluster_size, min_samples)


def hdbscan_fit(X, min_cluster_size: int, min_samples: int | None = None) -> ClusterModel:
    X = _as_matrix(X)
    n = len(X)
    min_samples = min_cluster_size if min_samples is None else min_samples
    if min_cluster_size < 2:
        raise DataError(f"min_cluster_size must be >= 2, got {min_cluster_size}")
    if min_cluster_size > n:
        raise DataError(f"min_cluster_size={min_cluster_size} exceeds {n} points")
    edges = mutual_reachability_mst(X, min_samples)
    return fit_from_mst(edges, n, min_cluster_size, min_samples)
