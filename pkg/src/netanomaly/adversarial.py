"""Adversarial training sets.

``T1`` is the clean (standardized) training set. ``T2`` nudges a share of the
rows by a fixed step along the sign of the LDA weight vector, towards the
opposite side of the LDA decision boundary. ``T3`` rescales and shifts the
malicious rows of chosen features so that their class mean lands exactly on
the normal-class mean.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifiers import LDA
from .dataset import Dataset

DEFAULT_FRACTION = 0.2


@dataclass
class PerturbationConfig:
    """Attack settings.

    Attributes:
        epsilon: LDA-FGSM step, in standardized units.
        fraction: share of rows the attacker can touch in the LDA-FGSM set.
        features: column indices shifted by the mean-shift attack.
        seed: row-selection seed.
    """

    epsilon: float
    features: list[int]
    fraction: float = DEFAULT_FRACTION
    seed: int = 0

    def validate(self, n_features: int | None = None) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.fraction <= 1:
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")
        if not self.features:
            raise ValueError("the mean-shift attack needs at least one feature")
        if n_features is not None:
            bad = [k for k in self.features if not 0 <= k < n_features]
            if bad:
                raise ValueError(f"feature indices out of range [0, {n_features}): {bad}")


@dataclass
class TrainingSetTriple:
    t1: Dataset
    t2: Dataset
    t3: Dataset
    provenance: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.t1, self.t2, self.t3))


def _check_binary(labels):
    y = np.asarray(labels).ravel()
    n0 = int((y == 0).sum())
    n1 = int((y == 1).sum())
    if n0 == 0 or n1 == 0:
        raise ValueError("both classes must be present")
    return y, n0, n1


def select_rows(n: int, fraction: float, seed: int) -> np.ndarray:
    """Sorted indices of the ``ceil(fraction * n)`` rows an attacker touches."""
    k = min(n, math.ceil(fraction * n))
    return np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))


def fgsm_directions(decision: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """``sign(V W)`` with ``V_k = -1`` where the decision is positive, else +1."""
    v = np.where(np.asarray(decision) > 0, -1.0, 1.0)
    return np.sign(np.outer(v, coef))


def lda_fgsm(features, labels, epsilon: float, fraction: float = DEFAULT_FRACTION, seed: int = 0,
             model: LDA | None = None) -> np.ndarray:
    """LDA-guided fast-gradient-sign perturbation.

    Fits :class:`LDA` on ``(features, labels)`` unless a fitted ``model`` is
    given, then moves each selected row by ``epsilon`` per coordinate in the
    direction that crosses the boundary. Coordinates with zero LDA weight are
    left alone. Unselected rows are returned bit-for-bit unchanged.
    """
    X = np.asarray(features, dtype=float)
    _check_binary(labels)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if model is None:
        model = LDA().fit(X, labels)
    rows = select_rows(len(X), fraction, seed)
    out = X.copy()
    if rows.size:
        d = model.decision_function(X[rows])
        out[rows] = X[rows] + epsilon * fgsm_directions(d, model.coef_)
    return out


def feature_mean_shift(features, labels, selected) -> np.ndarray:
    """Map malicious values ``x -> x * N1/N0 + (s0 - s1)/N0`` on the selected columns.

    ``s0``/``s1`` are the normal/malicious column sums and ``N0``/``N1`` the
    class counts, so the new malicious mean equals the old normal mean.
    Normal rows are untouched.
    """
    X = np.asarray(features, dtype=float)
    y, n0, n1 = _check_binary(labels)
    selected = list(selected)
    if not selected:
        raise ValueError("selected feature list is empty")
    m = X.shape[1]
    if any(not 0 <= k < m for k in selected):
        raise ValueError(f"selected features must be in [0, {m})")
    out = X.copy()
    mal = y == 1
    for k in dict.fromkeys(selected):
        col = X[:, k]
        s0 = col[~mal].sum()
        s1 = col[mal].sum()
        out[mal, k] = col[mal] * (n1 / n0) + (s0 - s1) / n0
    return out


def class_means(X: np.ndarray, y: np.ndarray, cols) -> dict:
    cols = list(cols)
    return {
        "normal": X[y == 0][:, cols].mean(axis=0).tolist(),
        "malicious": X[y == 1][:, cols].mean(axis=0).tolist(),
    }


def build_training_sets(train: Dataset, config: PerturbationConfig) -> TrainingSetTriple:
    """T1 = ``train``, T2 = :func:`lda_fgsm`, T3 = :func:`feature_mean_shift`."""
    config.validate(train.n_features)
    X, y = train.features, train.labels
    lda = LDA().fit(X, y)
    x2 = lda_fgsm(X, y, config.epsilon, config.fraction, config.seed, model=lda)
    x3 = feature_mean_shift(X, y, config.features)
    names = [train.feature_names[k] for k in config.features]
    provenance = {
        "config": asdict(config),
        "feature_names": names,
        "lda_coef": lda.coef_.tolist(),
        "perturbed_rows_t2": int(np.any(x2 != X, axis=1).sum()),
        "class_means_before": class_means(X, y, config.features),
        "class_means_after_t3": class_means(x3, y, config.features),
    }
    t1 = train.with_features(X)
    t2 = train.with_features(x2)
    t3 = train.with_features(x3)
    t1.meta["training_set"], t2.meta["training_set"], t3.meta["training_set"] = "T1", "T2", "T3"
    return TrainingSetTriple(t1, t2, t3, provenance)
