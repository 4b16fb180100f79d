from __future__ import annotations

import numpy as np

from .base import Classifier, logit_to_proba


def logistic_objective(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean negative log-likelihood plus ``l2/2 * ||w||^2`` and its gradient.

    ``params`` is ``[w_1..w_m, b]``; the intercept is not penalised.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)
    r = np.exp(-np.logaddexp(0.0, -z)) - y
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r / len(y) + l2 * w
    grad[-1] = r.mean()
    return loss, grad


class LogisticRegression(Classifier):
    """L2-regularised logistic regression fitted by full-batch gradient descent.

    Each step backtracks (Armijo, c=1e-4, halving) from twice the previous
    accepted step length. Stops when the gradient norm drops below ``tol`` or
    after ``max_iter`` steps.
    """

    kind = "logistic_regression"

    def __init__(self, l2: float = 1e-4, max_iter: int = 1000, tol: float = 1e-6):
        super().__init__()
        if l2 < 0:
            raise ValueError("l2 must be >= 0")
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if tol <= 0:
            raise ValueError("tol must be > 0")
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    @property
    def hyperparams(self):
        return {"l2": self.l2, "max_iter": self.max_iter, "tol": self.tol}

    def _fit(self, X, y):
        yf = y.astype(float)
        params = np.zeros(X.shape[1] + 1)
        loss, grad = logistic_objective(params, X, yf, self.l2)
        step = 1.0
        it = 0
        while it < self.max_iter:
            gnorm2 = float(grad @ grad)
            if gnorm2 < self.tol**2:
                break
            it += 1
            step = min(step * 2.0, 1e6)
            while True:
                cand = params - step * grad
                cand_loss, cand_grad = logistic_objective(cand, X, yf, self.l2)
                if cand_loss <= loss - 1e-4 * step * gnorm2 or step < 1e-12:
                    break
                step *= 0.5
            params, loss, grad = cand, cand_loss, cand_grad
        self.coef_ = params[:-1]
        self.intercept_ = float(params[-1])
        self.n_iter_ = it
        self.loss_ = loss

    def decision_function(self, X):
        X = self._check_predict(X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return logit_to_proba(self.decision_function(X))

    def _state(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_, "n_iter": self.n_iter_}

    def _load_state(self, s):
        self.coef_ = np.asarray(s["coef"], dtype=float)
        self.intercept_ = s["intercept"]
        self.n_iter_ = s.get("n_iter", 0)
