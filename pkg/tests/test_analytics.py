import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexposome.analytics import (cluster_summary, core_distances, grid_search_hdbscan, hdbscan_fit,
                                 mutual_reachability_mst, pca_fit, pca_select, pca_transform,
                                 silhouette, standardize)
from hexposome.analytics.summary import five_number
from hexposome.errors import DataError
from hexposome.frame import HexFrame

from fixtures import two_blobs
from oracles import (adjusted_rand_index, jacobi_eigh, mutual_reachability_matrix,
                     order_statistic_quantile, prim_total_weight, silhouette_bruteforce)

SEVEN = np.array([0, 0.1, 0.2, 10, 10.1, 10.2, 50])[:, None]


def canonical(labels):
    seen = {}
    return [-1 if x == -1 else seen.setdefault(x, len(seen)) for x in labels]


# ------------------------------------------------------------- standardize / PCA

def test_standardize_example():
    Z, mean, std = standardize(np.array([[1.0], [2.0], [3.0]]))
    assert Z.ravel() == pytest.approx([-1.2247449, 0.0, 1.2247449], abs=1e-7)
    assert std[0] == pytest.approx(math.sqrt(2 / 3))
    Z, _, _ = standardize(np.array([[5.0, 1.0], [5.0, 2.0]]))
    assert Z[:, 0].tolist() == [0.0, 0.0]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_standardize_moments_and_idempotence(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(rng.uniform(-100, 100, 4), rng.uniform(0.1, 50, 4), size=(30, 4))
    Z, _, _ = standardize(X)
    assert np.abs(Z.mean(axis=0)).max() <= 1e-12
    assert np.abs(Z.std(axis=0) - 1).max() <= 1e-12
    assert np.abs(standardize(Z)[0] - Z).max() <= 1e-12


def test_missing_values_rejected():
    with pytest.raises(DataError):
        standardize(np.array([[1.0], [np.nan]]))
    with pytest.raises(DataError):
        pca_fit(np.array([[1.0, 2.0]]))


def test_pca_rank_one():
    m = pca_fit(np.array([[1.0, 1.0], [-1.0, -1.0], [2.0, 2.0], [-2.0, -2.0]]))
    assert m.components[0] == pytest.approx([1 / math.sqrt(2), 1 / math.sqrt(2)], abs=1e-12)
    assert m.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_pca_matches_jacobi(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(5, 5))
    X = rng.normal(size=(40, 5)) @ A
    m = pca_fit(X)
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (len(X) - 1)
    vals, vecs = jacobi_eigh(cov)
    assert m.eigenvalues == pytest.approx(vals, abs=1e-8)
    for i in range(5):
        ref = vecs[:, i] * np.sign(vecs[np.argmax(np.abs(vecs[:, i])), i])
        assert m.components[i] == pytest.approx(ref, abs=1e-8)
    assert abs(m.explained_variance_ratio.sum() - 1) <= 1e-9
    gram = m.components @ m.components.T
    assert np.abs(gram - np.eye(5)).max() <= 1e-9
    assert np.all(np.diff(m.explained_variance_ratio) <= 1e-15)


def test_pca_scores_moments():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(500, 4)) @ rng.normal(size=(4, 4))
    m = pca_fit(X)
    S = pca_transform(m, X)
    assert np.abs(S.mean(axis=0)).max() <= 1e-9
    assert S.var(axis=0, ddof=1) == pytest.approx(m.eigenvalues, rel=1e-6)
    assert pca_transform(m, X, 2).shape == (500, 2)
    with pytest.raises(DataError):
        pca_transform(m, X, 5)


def test_pca_select():
    assert pca_select([0.7, 0.2, 0.05, 0.05], "threshold", 0.9) == 2
    assert pca_select([0.7, 0.2, 0.05, 0.05], "threshold", 1.0) == 4
    assert pca_select([0.5, 0.5], "elbow") == 1
    with pytest.raises(DataError):
        pca_select([0.5, 0.5], "knee")


def test_pca_elbow_chord_oracle():
    ratios = [0.6, 0.25, 0.05, 0.04, 0.03, 0.03]
    # distance from (k, r_k) to the chord through the end points, enumerated by hand
    x0, y0, x1, y1 = 1, ratios[0], len(ratios), ratios[-1]
    dist = [abs((y1 - y0) * k - (x1 - x0) * r + x1 * y0 - y1 * x0) / math.hypot(y1 - y0, x1 - x0)
            for k, r in enumerate(ratios, 1)]
    expected = dist.index(max(dist)) + 1
    assert expected == 3
    assert pca_select(ratios, "elbow") == expected


# ------------------------------------------------------------- core distances / MST

def test_core_distances():
    X = np.array([[0.0], [1.0], [10.0]])
    assert core_distances(X, 2).tolist() == [1.0, 1.0, 9.0]
    assert core_distances(X, 1).tolist() == [0.0, 0.0, 0.0]
    dup = np.array([[1.0], [1.0], [1.0], [4.0]])
    assert core_distances(dup, 3)[:3].tolist() == [0.0, 0.0, 0.0]


def test_mst_two_points():
    e = mutual_reachability_mst(np.array([[0.0, 0.0], [3.0, 4.0]]), 1)
    assert e.shape == (1, 3) and e[0, 2] == 5.0


@pytest.mark.parametrize("seed", range(10))
def test_mst_weight_matches_prim(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 80))
    X = rng.normal(size=(n, 3))
    ms = int(rng.integers(1, 6))
    edges = mutual_reachability_mst(X, ms)
    D = mutual_reachability_matrix(X, ms)
    assert edges[:, 2].sum() == pytest.approx(prim_total_weight(D), abs=1e-9)
    # every mutual reachability weight dominates the plain distance
    for u, v, w in edges:
        assert w >= np.linalg.norm(X[int(u)] - X[int(v)]) * (1 - 1e-15)
    perm = rng.permutation(n)
    assert mutual_reachability_mst(X[perm], ms)[:, 2].sum() == pytest.approx(edges[:, 2].sum(), abs=1e-9)


# ------------------------------------------------------------- HDBSCAN

def test_seven_point_fixture():
    m = hdbscan_fit(SEVEN, 2, 2)
    assert canonical(m.labels) == [0, 0, 0, 1, 1, 1, -1]


def test_two_blobs():
    X, truth = two_blobs()
    m = hdbscan_fit(X, 10, 10)
    assert m.n_clusters == 2
    assert adjusted_rand_index(m.labels, truth) >= 0.95
    assert set(m.labels.tolist()) <= {-1, 0, 1}


def test_identical_points_one_cluster():
    m = hdbscan_fit(np.ones((20, 2)), 5, 5)
    assert m.labels.tolist() == [0] * 20


def test_hdbscan_errors():
    with pytest.raises(DataError):
        hdbscan_fit(SEVEN, 1)
    with pytest.raises(DataError):
        hdbscan_fit(SEVEN, 8)


@pytest.mark.parametrize("seed", range(8))
def test_cluster_sizes_and_permutation(seed):
    rng = np.random.default_rng(100 + seed)
    X = np.vstack([rng.normal(rng.uniform(-8, 8, 2), rng.uniform(0.3, 1.2), size=(int(rng.integers(20, 50)), 2))
                   for _ in range(3)])
    mcs, ms = int(rng.integers(3, 12)), int(rng.integers(2, 10))
    m = hdbscan_fit(X, mcs, ms)
    for lab in set(m.labels.tolist()) - {-1}:
        assert (m.labels == lab).sum() >= mcs
    assert set(m.labels.tolist()) <= {-1, *range(m.n_clusters)}
    perm = rng.permutation(len(X))
    # with min_samples=1 the weights are plain distances and have no ties: exact equivariance
    m1, mp1 = hdbscan_fit(X, mcs, 1), hdbscan_fit(X[perm], mcs, 1)
    assert canonical(mp1.labels) == canonical(m1.labels[perm])
    # larger min_samples creates exactly tied weights; the index tie-break may then move
    # a point between neighbouring clusters, but never changes the cluster count
    mp = hdbscan_fit(X[perm], mcs, ms)
    assert mp.n_clusters == m.n_clusters
    assert adjusted_rand_index(mp.labels, m.labels[perm]) >= 0.9


def test_agrees_with_reference_library():
    sk = pytest.importorskip("sklearn.cluster")
    X, _ = two_blobs()
    ref = sk.HDBSCAN(min_cluster_size=10, min_samples=10).fit(X).labels_
    assert canonical(hdbscan_fit(X, 10, 10).labels) == canonical(ref)
    ref = sk.HDBSCAN(min_cluster_size=2, min_samples=2).fit(SEVEN).labels_
    assert canonical(hdbscan_fit(SEVEN, 2, 2).labels) == canonical(ref)
    # on random mixtures, only points whose merge order hinges on tied weights may differ
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = np.vstack([rng.normal(rng.uniform(-10, 10, 2), rng.uniform(0.2, 1.5), size=(40, 2))
                       for _ in range(3)])
        ours = hdbscan_fit(X, 5, 5).labels
        theirs = sk.HDBSCAN(min_cluster_size=5, min_samples=5).fit(X).labels_
        assert adjusted_rand_index(ours, theirs) >= 0.9


def test_condensed_tree_shape():
    m = hdbscan_fit(SEVEN, 2, 2)
    tree = m.condensed_tree
    assert tree.shape[1] == 4
    assert int(tree[:, 0].min()) == len(SEVEN)  # the root
    leaves = tree[tree[:, 1] < len(SEVEN)]
    assert sorted(leaves[:, 1].astype(int).tolist()) == list(range(7))


# ------------------------------------------------------------- silhouette / search

def test_silhouette_fixture():
    X = np.array([0, 0.1, 10, 10.1])[:, None]
    s = silhouette(X, [0, 0, 1, 1])
    assert s == pytest.approx(0.990, abs=1e-3)
    assert s == pytest.approx(silhouette_bruteforce(X, [0, 0, 1, 1]), abs=1e-12)
    assert silhouette(X, [0, 0, 0, 0]) is None
    assert silhouette(X, [0, 0, -1, -1]) is None


def test_silhouette_mixed_labels_near_zero():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(120, 2))
    labels = rng.integers(0, 2, 120)
    s = silhouette(X, labels)
    assert abs(s) <= 0.1
    assert s == pytest.approx(silhouette_bruteforce(X, labels), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_silhouette_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 3))
    labels = rng.integers(-1, 4, 25)
    got, ref = silhouette(X, labels), silhouette_bruteforce(X, labels)
    assert (got is None) == (ref is None)
    if ref is not None:
        assert got == pytest.approx(ref, abs=1e-12)


def test_true_partition_beats_merge():
    X, truth = two_blobs()
    assert silhouette(X, truth) >= (silhouette(X, np.where(truth == 0, 0, -1)) or -1)
    four = truth * 2 + (X[:, 1] > np.median(X[:, 1]))
    assert silhouette(X, truth) >= silhouette(X, four)


def test_grid_search_small_lattice_tie_break():
    X, _ = two_blobs()
    (mcs, ms), model, score = grid_search_hdbscan(X, [5, 10])
    assert (mcs, ms) == (5, 5)
    assert model.n_clusters == 2


def test_grid_search_identical_points():
    with pytest.raises(DataError, match="no valid clustering"):
        grid_search_hdbscan(np.zeros((30, 2)), [5, 10])


# ------------------------------------------------------------- summaries

def test_five_number():
    assert tuple(five_number([1, 2, 3, 4, 5])) == (1, 2, 3, 4, 5)
    assert len(set(five_number([3.3]))) == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_five_number_oracle(values):
    fn = five_number(values)
    for got, p in zip(fn, (0, 0.25, 0.5, 0.75, 1.0)):
        assert got == pytest.approx(order_statistic_quantile(values, p), rel=1e-12, abs=1e-9)


def test_cluster_summary(grid):
    f = HexFrame.from_records(grid.fingerprint(8), [(f"H8:0:{i}", "-", {"x": float(i)}) for i in range(6)],
                              ["x"])
    labels = [0, 0, 0, 1, 1, -1]
    out = cluster_summary(f, labels)
    assert set(out) == {-1, 0, 1}
    assert out[-1]["x"].min == out[-1]["x"].max == 5.0
    assert out[0]["x"].median == 1.0
    with pytest.raises(DataError):
        cluster_summary(f, [0, 1])
