"""The seven binary classifiers used by the stacking ensemble.

Every model follows the same contract::

    model = make_classifier("lda", ridge=1e-4).fit(X, y)
    model.predict_proba(X)   # (n, 2), rows sum to 1
    model.predict(X)         # argmax, ties to class 0

and can be round-tripped through :func:`model_to_dict` / :func:`model_from_dict`.
"""

from __future__ import annotations

import json
from pathlib import Path

from .base import FORMAT_VERSION, Classifier, NotFittedError
from .gaussian import LDA, QDA, GaussianNB
from .logistic import LogisticRegression, logistic_objective
from .tree import Bagging, DecisionTree, RandomForest, best_split

KINDS: dict[str, type[Classifier]] = {
    cls.kind: cls for cls in (LDA, QDA, GaussianNB, LogisticRegression, DecisionTree, Bagging, RandomForest)
}

ALIASES = {
    "naive-bayes": "gaussian_nb",
    "naive_bayes": "gaussian_nb",
    "nb": "gaussian_nb",
    "decision-tree": "decision_tree",
    "dt": "decision_tree",
    "logistic-regression": "logistic_regression",
    "lr": "logistic_regression",
    "random-forest": "random_forest",
    "rf": "random_forest",
}


def resolve_kind(kind: str) -> str:
    k = ALIASES.get(kind.lower(), kind.lower())
    if k not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}; choose from {sorted(KINDS)}")
    return k


def make_classifier(kind: str, **hyperparams) -> Classifier:
    return KINDS[resolve_kind(kind)](**hyperparams)


def fit(kind: str, hyperparams: dict | None, X, y) -> Classifier:
    return make_classifier(kind, **(hyperparams or {})).fit(X, y)


def model_to_dict(model: Classifier) -> dict:
    return model.to_dict()


def model_from_dict(d: dict) -> Classifier:
    version = d.get("format_version")
    if version is None or version > FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    model = make_classifier(d["kind"], **d["hyperparams"])
    model.n_features_ = d["n_features"]
    model._load_state(d["state"])
    model.fitted = True
    return model


def save_model(model: Classifier, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()) + "\n")


def load_model(path) -> Classifier:
    return model_from_dict(json.loads(Path(path).read_text()))


__all__ = [
    "Bagging",
    "Classifier",
    "DecisionTree",
    "GaussianNB",
    "KINDS",
    "LDA",
    "LogisticRegression",
    "NotFittedError",
    "QDA",
    "RandomForest",
    "best_split",
    "fit",
    "load_model",
    "logistic_objective",
    "make_classifier",
    "model_from_dict",
    "model_to_dict",
    "resolve_kind",
    "save_model",
]
