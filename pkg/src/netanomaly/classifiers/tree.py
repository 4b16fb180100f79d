"""CART decision trees and bootstrap ensembles of them."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .base import Classifier

LEAF = -1


def _check_tree_params(max_depth, min_samples_split, min_samples_leaf, max_features):
    if max_depth is not None and max_depth < 1:
        raise ValueError(f"max_depth must be >= 1 or None, got {max_depth}")
    if min_samples_split < 2:
        raise ValueError(f"min_samples_split must be >= 2, got {min_samples_split}")
    if min_samples_leaf < 1:
        raise ValueError(f"min_samples_leaf must be >= 1, got {min_samples_leaf}")
    if max_features is not None and max_features < 1:
        raise ValueError(f"max_features must be >= 1 or None, got {max_features}")


def best_split(X: np.ndarray, y: np.ndarray, features, min_samples_leaf: int = 1):
    """Lowest weighted-Gini split over ``features``.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Ties go to the lower feature index, then the lower threshold.
    Returns ``(feature, threshold, impurity)`` or ``None`` if no split is valid.
    The impurity is ``n_left*gini_left + n_right*gini_right`` halved.
    """
    n = len(y)
    if n < 2 * min_samples_leaf:
        return None
    total_pos = int(y.sum())
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    size_ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    best = None
    for f in features:
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = size_ok & (xs[1:] > xs[:-1])
        if not valid.any():
            continue
        lp = np.cumsum(y[order])[:-1].astype(float)
        rp = total_pos - lp
        imp = lp * (n_left - lp) / n_left + rp * (n_right - rp) / n_right
        imp[~valid] = np.inf
        i = int(np.argmin(imp))
        if best is None or imp[i] < best[2]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                # adjacent floats: midpoint rounds up onto the right value
                thr = xs[i]
            best = (int(f), float(thr), float(imp[i]))
    return best


class DecisionTree(Classifier):
    """CART classifier on Gini impurity.

    Impure nodes are split whenever a valid threshold exists, even when the
    split does not lower the impurity (this is what lets a depth-2 tree
    solve XOR). Leaves predict the class frequency of their training rows.
    ``max_features`` draws a fresh uniform feature subset at every split.
    """

    kind = "decision_tree"
    _needs_both_classes = False

    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2,
                 min_samples_leaf: int = 1, max_features: int | None = None, seed: int = 0):
        super().__init__()
        _check_tree_params(max_depth, min_samples_split, min_samples_leaf, max_features)
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed

    @property
    def hyperparams(self):
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "seed": self.seed,
        }

    def _fit(self, X, y, rng=None):
        if rng is None:
            rng = np.random.default_rng(self.seed)
        n, m = X.shape
        k = m if self.max_features is None else min(self.max_features, m)
        max_depth = self.max_depth if self.max_depth is not None else math.inf
        msl = self.min_samples_leaf

        feature, threshold, left, right, value, counts = [], [], [], [], [], []

        def new_node(p, size):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(p)
            counts.append(size)
            return len(feature) - 1

        # one stable argsort per feature; children inherit the order by
        # stable partitioning, so ties stay in row order at every node
        order = np.argsort(X, axis=0, kind="stable").T
        yf = y.astype(float)
        root = new_node(float(y.mean()) if n else 0.0, n)
        # per node: row indices, values and labels, each sorted by every feature
        stack = [(root, order, np.take_along_axis(X.T, order, axis=1), yf[order], 0)]
        go_left = np.zeros(n, dtype=bool)
        while stack:
            node, S, XS, YS, depth = stack.pop()
            size = S.shape[1]
            p = value[node]
            if depth >= max_depth or size < self.min_samples_split or p == 0.0 or p == 1.0 or size < 2 * msl:
                continue
            feats = np.sort(rng.choice(m, size=k, replace=False)) if k < m else np.arange(m)
            xs = XS[feats]
            n_left = np.arange(1, size, dtype=float)
            n_right = size - n_left
            lp = np.cumsum(YS[feats], axis=1)[:, :-1]
            rp = p * size - lp
            valid = (xs[:, 1:] > xs[:, :-1]) & (n_left >= msl) & (n_right >= msl)
            imp = lp * (n_left - lp) / n_left + rp * (n_right - rp) / n_right
            imp[~valid] = np.inf
            pos = np.argmin(imp, axis=1)
            best_imp = imp[np.arange(len(feats)), pos]
            j = int(np.argmin(best_imp))
            if not np.isfinite(best_imp[j]):
                continue
            i = int(pos[j])
            f = int(feats[j])
            lo, hi = xs[j, i], xs[j, i + 1]
            thr = 0.5 * (lo + hi)
            if thr >= hi:
                # adjacent floats: midpoint rounds up onto the right value
                thr = lo
            n_l = i + 1
            go_left[S[f]] = np.arange(size) < n_l
            mask = go_left[S]
            left_parts = [a[mask].reshape(m, n_l) for a in (S, XS, YS)]
            right_parts = [a[~mask].reshape(m, size - n_l) for a in (S, XS, YS)]
            feature[node], threshold[node] = f, float(thr)
            left[node] = new_node(float(left_parts[2][0].mean()), n_l)
            right[node] = new_node(float(right_parts[2][0].mean()), size - n_l)
            # right pushed first so the left subtree is expanded first
            stack.append((right[node], *right_parts, depth + 1))
            stack.append((left[node], *left_parts, depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value, dtype=float)
        self.node_count_ = np.array(counts, dtype=np.int64)

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.feature_), dtype=np.int64)
        for i in range(len(self.feature_)):
            if self.feature_[i] != LEAF:
                depth[self.left_[i]] = depth[self.right_[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = self._check_predict(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature_[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature_[cur]] <= self.threshold_[cur]
            node[active] = np.where(go_left, self.left_[cur], self.right_[cur])
            active = active[self.feature_[node[active]] != LEAF]
        return node

    def predict_proba(self, X):
        p1 = self.value_[self.apply(X)]
        return np.column_stack([1.0 - p1, p1])

    def _state(self):
        return {
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
            "node_count": self.node_count_.tolist(),
        }

    def _load_state(self, s):
        self.feature_ = np.asarray(s["feature"], dtype=np.int64)
        self.threshold_ = np.asarray(s["threshold"], dtype=float)
        self.left_ = np.asarray(s["left"], dtype=np.int64)
        self.right_ = np.asarray(s["right"], dtype=np.int64)
        self.value_ = np.asarray(s["value"], dtype=float)
        self.node_count_ = np.asarray(s["node_count"], dtype=np.int64)


class Bagging(Classifier):
    """Bootstrap-aggregated decision trees; probability = mean tree probability.

    Tree ``i`` draws from its own ``SeedSequence(seed).spawn`` stream, so
    ``n_jobs > 1`` gives bit-identical models to serial training.
    ``max_samples`` is the bootstrap sample size (default: n rows). With
    ``bootstrap=False`` rows are drawn without replacement, or all rows in
    order when ``max_samples`` is unset.
    """

    kind = "bagging"
    _needs_both_classes = False
    _default_max_features = None

    def __init__(self, n_estimators: int = 10, max_samples: int | None = None, bootstrap: bool = True,
                 max_depth: int | None = None, min_samples_split: int = 2, min_samples_leaf: int = 1,
                 max_features: int | None = None, seed: int = 0, n_jobs: int = 1):
        super().__init__()
        if n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
        if max_samples is not None and max_samples < 1:
            raise ValueError(f"max_samples must be >= 1, got {max_samples}")
        _check_tree_params(max_depth, min_samples_split, min_samples_leaf, max_features)
        self.n_estimators = n_estimators
        self.max_samples = max_samples
        self.bootstrap = bootstrap
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed
        self.n_jobs = n_jobs

    @property
    def hyperparams(self):
        return {
            "n_estimators": self.n_estimators,
            "max_samples": self.max_samples,
            "bootstrap": self.bootstrap,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "seed": self.seed,
        }

    def _tree_max_features(self, m):
        return self.max_features

    def _fit_one(self, X, y, child_seed, max_features):
        rng = np.random.default_rng(child_seed)
        n = len(y)
        size = n if self.max_samples is None else self.max_samples
        if self.bootstrap:
            idx = rng.integers(0, n, size=size)
        elif self.max_samples is None:
            idx = np.arange(n)
        else:
            idx = np.sort(rng.choice(n, size=min(size, n), replace=False))
        tree = DecisionTree(self.max_depth, self.min_samples_split, self.min_samples_leaf, max_features)
        tree.n_features_ = X.shape[1]
        tree._fit(X[idx], y[idx], rng=rng)
        tree.fitted = True
        return tree

    def _fit(self, X, y):
        children = np.random.SeedSequence(self.seed).spawn(self.n_estimators)
        mf = self._tree_max_features(X.shape[1])
        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                self.estimators_ = list(pool.map(lambda s: self._fit_one(X, y, s, mf), children))
        else:
            self.estimators_ = [self._fit_one(X, y, s, mf) for s in children]

    def predict_proba(self, X):
        X = self._check_predict(X)
        p1 = np.zeros(X.shape[0])
        for tree in self.estimators_:
            p1 += tree.value_[tree.apply(X)]
        p1 /= len(self.estimators_)
        return np.column_stack([1.0 - p1, p1])

    def _state(self):
        return {"estimators": [t._state() for t in self.estimators_]}

    def _load_state(self, s):
        self.estimators_ = []
        for ts in s["estimators"]:
            t = DecisionTree()
            t._load_state(ts)
            t.n_features_ = self.n_features_
            t.fitted = True
            self.estimators_.append(t)


class RandomForest(Bagging):
    """Bagging with a random feature subset per split (default ``ceil(sqrt(m))``)."""

    kind = "random_forest"

    def _tree_max_features(self, m):
        return self.max_features if self.max_features is not None else math.ceil(math.sqrt(m))
