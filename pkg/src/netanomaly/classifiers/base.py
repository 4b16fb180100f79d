from __future__ import annotations

import numpy as np

FORMAT_VERSION = 1


class NotFittedError(RuntimeError):
    pass


def check_Xy(X, y=None, *, both_classes: bool = True):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if np.isnan(X).any():
        raise ValueError("features contain NaN")
    if y is None:
        return X
    y = np.asarray(y).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    y = y.astype(np.int64)
    if both_classes and (y.min() == y.max()):
        raise ValueError("both classes must be present to fit this model")
    return X, y


def log_probs_to_proba(log_joint: np.ndarray) -> np.ndarray:
    """Normalise per-class log joint likelihoods (n x 2) into probabilities."""
    norm = np.logaddexp(log_joint[:, 0], log_joint[:, 1])
    return np.exp(log_joint - norm[:, None])


def logit_to_proba(d: np.ndarray) -> np.ndarray:
    """[P(0), P(1)] for log-odds ``d`` without overflow."""
    d = np.asarray(d, dtype=float)
    return np.column_stack([np.exp(-np.logaddexp(0.0, d)), np.exp(-np.logaddexp(0.0, -d))])


class Classifier:
    """Binary classifier contract shared by every model kind.

    Subclasses set ``kind``, validate hyperparameters in ``__init__``, and
    implement ``_fit``, ``predict_proba``, ``_state`` and ``_load_state``.
    """

    kind: str = ""

    def __init__(self):
        self.fitted = False
        self.n_features_: int | None = None

    @property
    def hyperparams(self) -> dict:
        return {}

    def fit(self, X, y):
        X, y = check_Xy(X, y, both_classes=self._needs_both_classes)
        self.n_features_ = X.shape[1]
        self._fit(X, y)
        self.fitted = True
        return self

    _needs_both_classes = True

    def _check_predict(self, X) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError(f"{self.kind} model is not fitted")
        X = check_Xy(X)
        if X.shape[1] != self.n_features_:
            raise ValueError(f"model was fitted on {self.n_features_} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        # ties go to class 0
        return (p[:, 1] > p[:, 0]).astype(np.int64)

    def to_dict(self) -> dict:
        if not self.fitted:
            raise NotFittedError("only fitted models can be serialised")
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "hyperparams": self.hyperparams,
            "n_features": self.n_features_,
            "state": self._state(),
        }

    def _state(self) -> dict:
        raise NotImplementedError

    def _load_state(self, state: dict) -> None:
        raise NotImplementedError

    def __repr__(self):
        hp = ", ".join(f"{k}={v!r}" for k, v in self.hyperparams.items())
        return f"{type(self).__name__}({hp})"
