"""Unsupervised anomaly scorers: isolation forest and local outlier factor.

Both are exactly permutation-equivariant: the forest is grown on rows put
into a canonical (lexicographic) order first, and LOF sums neighbour
quantities in sorted order, so shuffling the input only shuffles the scores.
"""

from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.5772156649015329
LOF_DISTANCE_FLOOR = 1e-12


def harmonic(k: int) -> float:
    if k <= 0:
        return 0.0
    return float(np.sum(1.0 / np.arange(1, k + 1)))


def average_path_length(n: int) -> float:
    """Mean unsuccessful-search depth in a BST of ``n`` keys: ``2H(n-1) - 2(n-1)/n``."""
    if n <= 1:
        return 0.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


class IsolationTree:
    __slots__ = ("feature", "split", "left", "right", "size", "depth")

    def __init__(self, X: np.ndarray, height_limit: int, rng: np.random.Generator):
        feature, split, left, right, size, depth = [], [], [], [], [], []

        def leaf(n, d):
            feature.append(-1)
            split.append(0.0)
            left.append(-1)
            right.append(-1)
            size.append(n)
            depth.append(d)
            return len(feature) - 1

        root = leaf(len(X), 0)
        stack = [(root, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            d = depth[node]
            if d >= height_limit or len(idx) <= 1:
                continue
            sub = X[idx]
            lo = sub.min(axis=0)
            hi = sub.max(axis=0)
            live = np.flatnonzero(hi > lo)
            if live.size == 0:
                continue
            f = int(live[rng.integers(live.size)])
            s = float(rng.uniform(lo[f], hi[f]))
            go_left = sub[:, f] <= s
            feature[node], split[node] = f, s
            left[node] = leaf(int(go_left.sum()), d + 1)
            right[node] = leaf(int((~go_left).sum()), d + 1)
            stack.append((right[node], idx[~go_left]))
            stack.append((left[node], idx[go_left]))

        self.feature = np.array(feature, dtype=np.int64)
        self.split = np.array(split)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.size = np.array(size, dtype=np.int64)
        self.depth = np.array(depth, dtype=np.int64)

    @property
    def height(self) -> int:
        return int(self.depth.max())

    def path_length(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.split[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        corr = np.array([average_path_length(int(s)) for s in self.size])
        return self.depth[node] + corr[node]


def canonical_order(X: np.ndarray) -> np.ndarray:
    """Row order sorted lexicographically by (column 0, column 1, ...)."""
    return np.lexsort(X.T[::-1])


class IsolationForest:
    """Isolation forest (random feature, uniform split in [min, max]).

    Trees are capped at ``ceil(log2(subsample))`` levels; capped leaves add
    ``average_path_length(leaf size)`` to the path. ``score`` returns
    ``2 ** (-mean_path / average_path_length(subsample))``; higher means
    more anomalous.
    """

    def __init__(self, n_trees: int = 100, subsample: int = 256, seed: int = 0):
        if n_trees < 1 or subsample < 1:
            raise ValueError("n_trees and subsample must be positive")
        self.n_trees = n_trees
        self.subsample = subsample
        self.seed = seed

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 2:
            raise ValueError("isolation forest needs a 2-D matrix with at least 2 rows")
        Xc = X[canonical_order(X)]
        n = len(Xc)
        self.subsample_ = min(self.subsample, n)
        self.height_limit_ = math.ceil(math.log2(self.subsample_)) if self.subsample_ > 1 else 0
        self.trees_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child)
            rows = np.sort(rng.choice(n, size=self.subsample_, replace=False))
            self.trees_.append(IsolationTree(Xc[rows], self.height_limit_, rng))
        return self

    def mean_path_length(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = np.zeros(X.shape[0])
        for tree in self.trees_:
            total += tree.path_length(X)
        return total / len(self.trees_)

    def score(self, X) -> np.ndarray:
        return 2.0 ** (-self.mean_path_length(X) / average_path_length(self.subsample_))


def isolation_forest_score(features, n_trees: int = 100, subsample: int = 256, seed: int = 0) -> np.ndarray:
    """Fit on ``features`` and score the same rows."""
    X = np.asarray(features, dtype=float)
    return IsolationForest(n_trees, subsample, seed).fit(X).score(X)


def _neighbourhoods(X: np.ndarray, k: int, chunk_bytes: int = 64 << 20):
    """k-distance and the tie-inclusive k-neighbourhood of every row."""
    n, m = X.shape
    rows_per_chunk = max(1, chunk_bytes // (8 * n * max(m, 1)))
    kdist = np.empty(n)
    nbr_idx: list[np.ndarray] = []
    nbr_dist: list[np.ndarray] = []
    for start in range(0, n, rows_per_chunk):
        stop = min(n, start + rows_per_chunk)
        diff = X[start:stop, None, :] - X[None, :, :]
        D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        D[np.arange(stop - start), np.arange(start, stop)] = np.inf
        kd = np.partition(D, k - 1, axis=1)[:, k - 1]
        kdist[start:stop] = kd
        for i in range(stop - start):
            idx = np.flatnonzero(D[i] <= kd[i])
            nbr_idx.append(idx)
            nbr_dist.append(D[i, idx])
    return kdist, nbr_idx, nbr_dist


def _sorted_mean(values: np.ndarray) -> float:
    # summation order fixed by value, not by row position
    return float(np.sort(values).sum()) / len(values)


def lof_score(features, k: int = 20) -> np.ndarray:
    """Local outlier factor with tie-inclusive k-neighbourhoods.

    Distances are Euclidean on the rows as given; standardize beforehand.
    Mean reachability distances are floored at ``1e-12`` so duplicate-heavy
    data does not divide by zero.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must be in [1, n), got k={k}, n={n}")
    kdist, nbr_idx, nbr_dist = _neighbourhoods(X, k)
    lrd = np.empty(n)
    for p in range(n):
        reach = np.maximum(kdist[nbr_idx[p]], nbr_dist[p])
        lrd[p] = 1.0 / max(_sorted_mean(reach), LOF_DISTANCE_FLOOR)
    return np.array([_sorted_mean(lrd[nbr_idx[p]]) / lrd[p] for p in range(n)])


def contamination_threshold(scores, contamination: float) -> float:
    """Score of the ``ceil(contamination * n)``-th most anomalous row."""
    s = np.sort(np.asarray(scores, dtype=float))[::-1]
    if not 0 < contamination <= 1:
        raise ValueError("contamination must be in (0, 1]")
    return float(s[max(1, math.ceil(contamination * len(s))) - 1])


def flag_anomalies(scores, contamination: float) -> np.ndarray:
    """1 for rows scoring at or above :func:`contamination_threshold`."""
    s = np.asarray(scores, dtype=float)
    return (s >= contamination_threshold(s, contamination)).astype(np.int64)


def synth_outliers(n: int = 1000, outlier_fraction: float = 0.1, separation: float = 6.0, m: int = 4,
                   seed: int = 0):
    """Standard-normal cluster plus outliers scattered on a sphere of radius ``separation``.

    Returns ``(X, labels)`` with label 1 on outliers.
    """
    rng = np.random.default_rng(seed)
    n_out = int(round(outlier_fraction * n))
    inliers = rng.standard_normal((n - n_out, m))
    dirs = rng.standard_normal((n_out, m))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    outliers = dirs * separation + 0.1 * rng.standard_normal((n_out, m))
    X = np.vstack([inliers, outliers])
    y = np.r_[np.zeros(n - n_out, dtype=np.int64), np.ones(n_out, dtype=np.int64)]
    perm = rng.permutation(n)
    return X[perm], y[perm]
