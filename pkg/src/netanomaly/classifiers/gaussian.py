"""Gaussian generative classifiers: LDA, QDA and Gaussian naive Bayes.

All three score classes through log joint likelihoods and normalise in log
space, so inputs far from the training data do not overflow.
"""

from __future__ import annotations

import math

import numpy as np

from .base import Classifier, log_probs_to_proba, logit_to_proba

_LOG_2PI = math.log(2 * math.pi)


def _default_ridge(cov: np.ndarray) -> float:
    m = cov.shape[0]
    delta = 1e-6 * float(np.trace(cov)) / m
    return delta if delta > 0 else 1e-9


def _class_stats(X, y):
    n = len(y)
    priors = np.array([(y == 0).sum(), (y == 1).sum()], dtype=float) / n
    means = np.stack([X[y == 0].mean(axis=0), X[y == 1].mean(axis=0)])
    return priors, means


class LDA(Classifier):
    """Linear discriminant analysis with a shared, ridge-regularised covariance.

    The pooled within-class covariance uses the unbiased divisor ``n - 2``;
    ``ridge=None`` adds ``1e-6 * trace / m`` to the diagonal.
    """

    kind = "lda"

    def __init__(self, ridge: float | None = None):
        super().__init__()
        if ridge is not None and ridge < 0:
            raise ValueError("ridge must be >= 0")
        self.ridge = ridge

    @property
    def hyperparams(self):
        return {"ridge": self.ridge}

    def _fit(self, X, y):
        n, m = X.shape
        self.priors_, self.means_ = _class_stats(X, y)
        centered = X - self.means_[y]
        pooled = centered.T @ centered / max(n - 2, 1)
        delta = self.ridge if self.ridge is not None else _default_ridge(pooled)
        self.ridge_ = delta
        self.covariance_ = pooled + delta * np.eye(m)
        diff = self.means_[1] - self.means_[0]
        self.coef_ = np.linalg.solve(self.covariance_, diff)
        self.intercept_ = float(
            -0.5 * (self.means_[1] + self.means_[0]) @ self.coef_ + math.log(self.priors_[1] / self.priors_[0])
        )

    def decision_function(self, X) -> np.ndarray:
        """log P(y=1 | x) - log P(y=0 | x)."""
        X = self._check_predict(X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return logit_to_proba(self.decision_function(X))

    def _state(self):
        return {
            "priors": self.priors_.tolist(),
            "means": self.means_.tolist(),
            "covariance": self.covariance_.tolist(),
            "ridge": self.ridge_,
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
        }

    def _load_state(self, s):
        self.priors_ = np.asarray(s["priors"])
        self.means_ = np.asarray(s["means"])
        self.covariance_ = np.asarray(s["covariance"])
        self.ridge_ = s["ridge"]
        self.coef_ = np.asarray(s["coef"])
        self.intercept_ = s["intercept"]


class QDA(Classifier):
    """Quadratic discriminant analysis: one ridge-regularised covariance per class."""

    kind = "qda"

    def __init__(self, ridge: float | None = None):
        super().__init__()
        if ridge is not None and ridge < 0:
            raise ValueError("ridge must be >= 0")
        self.ridge = ridge

    @property
    def hyperparams(self):
        return {"ridge": self.ridge}

    def _fit(self, X, y):
        m = X.shape[1]
        self.priors_, self.means_ = _class_stats(X, y)
        covs = []
        for c in (0, 1):
            Xc = X[y == c] - self.means_[c]
            S = Xc.T @ Xc / max(len(Xc) - 1, 1)
            delta = self.ridge if self.ridge is not None else _default_ridge(S)
            covs.append(S + delta * np.eye(m))
        self.covariances_ = np.stack(covs)
        self._factor()

    def _factor(self):
        self._chol = [np.linalg.cholesky(S) for S in self.covariances_]
        self._logdet = [2.0 * float(np.log(np.diag(L)).sum()) for L in self._chol]

    def _log_joint(self, X):
        m = X.shape[1]
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            z = np.linalg.solve(self._chol[c], (X - self.means_[c]).T)
            maha = np.einsum("ij,ij->j", z, z)
            out[:, c] = math.log(self.priors_[c]) - 0.5 * (self._logdet[c] + maha + m * _LOG_2PI)
        return out

    def predict_proba(self, X):
        X = self._check_predict(X)
        return log_probs_to_proba(self._log_joint(X))

    def _state(self):
        return {
            "priors": self.priors_.tolist(),
            "means": self.means_.tolist(),
            "covariances": self.covariances_.tolist(),
        }

    def _load_state(self, s):
        self.priors_ = np.asarray(s["priors"])
        self.means_ = np.asarray(s["means"])
        self.covariances_ = np.asarray(s["covariances"])
        self._factor()


class GaussianNB(Classifier):
    """Gaussian naive Bayes with per-class, per-feature MLE variances.

    Variances are floored at ``var_floor`` (default ``1e-9`` times the largest
    per-feature variance of the training matrix).
    """

    kind = "gaussian_nb"

    def __init__(self, var_floor: float | None = None):
        super().__init__()
        if var_floor is not None and var_floor < 0:
            raise ValueError("var_floor must be >= 0")
        self.var_floor = var_floor

    @property
    def hyperparams(self):
        return {"var_floor": self.var_floor}

    def _fit(self, X, y):
        self.priors_, self.means_ = _class_stats(X, y)
        floor = self.var_floor
        if floor is None:
            floor = 1e-9 * float(X.var(axis=0).max())
        if floor <= 0:
            floor = 1e-9
        self.floor_ = floor
        var = np.stack([X[y == 0].var(axis=0), X[y == 1].var(axis=0)])
        self.vars_ = np.maximum(var, floor)

    def _log_joint(self, X):
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            v = self.vars_[c]
            out[:, c] = (
                math.log(self.priors_[c])
                - 0.5 * float(np.sum(np.log(2 * math.pi * v)))
                - 0.5 * np.sum((X - self.means_[c]) ** 2 / v, axis=1)
            )
        return out

    def predict_proba(self, X):
        X = self._check_predict(X)
        return log_probs_to_proba(self._log_joint(X))

    def _state(self):
        return {
            "priors": self.priors_.tolist(),
            "means": self.means_.tolist(),
            "vars": self.vars_.tolist(),
            "floor": self.floor_,
        }

    def _load_state(self, s):
        self.priors_ = np.asarray(s["priors"])
        self.means_ = np.asarray(s["means"])
        self.vars_ = np.asarray(s["vars"])
        self.floor_ = s["floor"]
