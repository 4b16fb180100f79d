import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netanomaly import baselines as B
from netanomaly.evaluation import auc


def test_average_path_length_values():
    assert B.average_path_length(1) == 0.0
    assert B.average_path_length(2) == 1.0
    # 2H(2) - 2*2/3 = 3 - 4/3
    assert B.average_path_length(3) == pytest.approx(3 - 4 / 3)
    n = 256
    approx = 2 * (math.log(n - 1) + B.EULER_GAMMA) - 2 * (n - 1) / n
    assert B.average_path_length(n) == pytest.approx(approx, abs=1e-2)


def test_isolation_forest_flags_far_outlier(rng):
    X = np.vstack([rng.normal(scale=0.1, size=(200, 2)), [[5.0, 5.0]]])
    s = B.isolation_forest_score(X, seed=1)
    assert int(np.argmax(s)) == 200
    assert np.all((s > 0) & (s < 1))


def test_isolation_forest_identical_points():
    s = B.isolation_forest_score(np.ones((2, 3)), n_trees=10)
    assert s[0] == s[1]


def test_isolation_forest_height_limit_and_clamp(rng):
    X = rng.normal(size=(100, 3))
    forest = B.IsolationForest(n_trees=20, subsample=512, seed=0).fit(X)
    assert forest.subsample_ == 100
    limit = math.ceil(math.log2(100))
    assert all(t.height <= limit for t in forest.trees_)
    with pytest.raises(ValueError):
        B.IsolationForest().fit(np.ones((1, 2)))


def test_isolation_forest_deterministic(rng):
    X = rng.normal(size=(300, 4))
    assert B.isolation_forest_score(X, seed=4).tobytes() == B.isolation_forest_score(X, seed=4).tobytes()


@given(st.integers(0, 2**31 - 1))
def test_isolation_forest_permutation_equivariance(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(60, 3))
    X[5] = X[9]  # duplicate rows must not break exactness
    p = r.permutation(60)
    s = B.isolation_forest_score(X, n_trees=15, subsample=32, seed=seed)
    assert B.isolation_forest_score(X[p], n_trees=15, subsample=32, seed=seed).tobytes() == s[p].tobytes()


def test_isolation_forest_affine_invariance(rng):
    X = rng.normal(size=(150, 3))
    scale = np.array([3.0, 0.5, 10.0])
    shift = np.array([-4.0, 2.0, 100.0])
    a = B.isolation_forest_score(X, n_trees=30, seed=2)
    b = B.isolation_forest_score(X * scale + shift, n_trees=30, seed=2)
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_lof_grid_interior_is_inlier():
    g = np.stack(np.meshgrid(np.arange(15.0), np.arange(15.0)), -1).reshape(-1, 2)
    s = B.lof_score(g, k=8)
    interior = (g[:, 0] > 3) & (g[:, 0] < 11) & (g[:, 1] > 3) & (g[:, 1] < 11)
    assert np.all((s[interior] >= 0.9) & (s[interior] <= 1.1))


def test_lof_distant_outlier(rng):
    X = np.vstack([rng.normal(scale=0.2, size=(100, 2)), [[6.0, 6.0]]])
    s = B.lof_score(X, k=10)
    assert s[-1] > 1.5 and int(np.argmax(s)) == 100


def test_lof_symmetric_data_k_n_minus_one():
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    X = np.column_stack([np.cos(ang), np.sin(ang)])
    s = B.lof_score(X, k=11)
    np.testing.assert_allclose(s, s[0], atol=1e-9)


def test_lof_matches_sklearn_on_tie_free_data(rng):
    from sklearn.neighbors import LocalOutlierFactor

    X = rng.normal(size=(300, 3))
    sk = LocalOutlierFactor(n_neighbors=15, algorithm="brute").fit(X)
    np.testing.assert_allclose(B.lof_score(X, k=15), -sk.negative_outlier_factor_, rtol=1e-9)


def test_lof_duplicates_stay_finite():
    X = np.vstack([np.zeros((30, 2)), [[1.0, 1.0]]])
    s = B.lof_score(X, k=5)
    assert np.all(np.isfinite(s))


def test_lof_k_bounds():
    with pytest.raises(ValueError):
        B.lof_score(np.zeros((5, 2)), k=5)
    with pytest.raises(ValueError):
        B.lof_score(np.zeros((5, 2)), k=0)


@given(st.integers(0, 2**31 - 1))
def test_lof_permutation_equivariance(seed):
    r = np.random.default_rng(seed)
    X = np.round(r.normal(size=(50, 2)), 1)  # rounding creates distance ties
    p = r.permutation(50)
    s = B.lof_score(X, k=6)
    assert B.lof_score(X[p], k=6).tobytes() == s[p].tobytes()


def test_lof_small_chunks_match(rng):
    X = rng.normal(size=(120, 2))
    kd, idx, dist = B._neighbourhoods(X, 7, chunk_bytes=1)
    kd2, idx2, _ = B._neighbourhoods(X, 7)
    np.testing.assert_array_equal(kd, kd2)
    assert all(np.array_equal(a, b) for a, b in zip(idx, idx2))


def test_contamination_threshold_and_flags():
    s = np.array([0.1, 0.9, 0.5, 0.7, 0.3])
    assert B.contamination_threshold(s, 0.4) == 0.7
    np.testing.assert_array_equal(B.flag_anomalies(s, 0.4), [0, 1, 0, 1, 0])
    with pytest.raises(ValueError):
        B.contamination_threshold(s, 0.0)


def test_flag_count_follows_contamination():
    X, y = B.synth_outliers(400, seed=5)
    s = B.isolation_forest_score(X, seed=5)
    assert B.flag_anomalies(s, 0.02).sum() == 8
    assert auc(y, s) > 0.9


def test_synth_outliers_shape():
    X, y = B.synth_outliers(500, 0.1, separation=6, m=3, seed=1)
    assert X.shape == (500, 3) and y.sum() == 50
    np.testing.assert_allclose(np.linalg.norm(X[y == 1], axis=1), 6, atol=1.0)
