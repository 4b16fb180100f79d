"""Two-level soft-voting stacking ensemble.

Level 1 holds one classifier per training set (clean, LDA-FGSM, mean-shift),
each standardized by the statistics of its own training set. Their
malicious-class probabilities form the level-2 feature matrix.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classifiers
from .adversarial import TrainingSetTriple
from .dataset import FeatureStats, fit_stats
from .evaluation import f1_per_class

SET_IDS = ("T1", "T2", "T3")
DEFAULT_MEMBERS: list[tuple[str, dict]] = [
    ("logistic_regression", {}),
    ("decision_tree", {}),
    ("lda", {}),
]
DEFAULT_LEVEL2 = "gaussian_nb"
FORMAT_VERSION = 1


@dataclass
class Level1Member:
    model: classifiers.Classifier
    stats: FeatureStats
    set_id: str
    train_seconds: float | None = None

    def malicious_proba(self, X: np.ndarray) -> np.ndarray:
        return self.model.predict_proba(self.stats.transform(X))[:, 1]


@dataclass
class Level1Stack:
    members: list[Level1Member]

    @property
    def width(self) -> int:
        return len(self.members)

    @property
    def names(self) -> list[str]:
        return [f"{m.model.kind}@{m.set_id}" for m in self.members]


def _fit_member(kind, hyperparams, dataset, set_id) -> Level1Member:
    stats = fit_stats(dataset.features)
    model = classifiers.make_classifier(kind, **(hyperparams or {}))
    start = time.perf_counter()
    model.fit(stats.transform(dataset.features), dataset.labels)
    return Level1Member(model, stats, set_id, time.perf_counter() - start)


def train_level1(triple: TrainingSetTriple, member_specs: Sequence[tuple[str, dict]] | None = None) -> Level1Stack:
    """Fit one member per training set, aligned to (T1, T2, T3)."""
    specs = list(DEFAULT_MEMBERS if member_specs is None else member_specs)
    if len(specs) != 3:
        raise ValueError(f"expected 3 member specs aligned to {SET_IDS}, got {len(specs)}")
    sets = (triple.t1, triple.t2, triple.t3)
    return Level1Stack([_fit_member(k, hp, ds, sid) for (k, hp), ds, sid in zip(specs, sets, SET_IDS)])


def level1_meta_features(stack: Level1Stack, raw_features) -> np.ndarray:
    """One malicious-probability column per member."""
    X = np.asarray(raw_features, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if not stack.members:
        return np.zeros((X.shape[0], 0))
    return np.column_stack([m.malicious_proba(X) for m in stack.members])


def train_level2(meta, labels, kind: str = DEFAULT_LEVEL2, hyperparams: dict | None = None) -> classifiers.Classifier:
    return classifiers.fit(kind, hyperparams, meta, labels)


@dataclass
class StackedEnsemble:
    level1: Level1Stack
    level2: classifiers.Classifier
    meta_feature_names: list[str] = field(default_factory=list)
    level2_train_seconds: float | None = None

    def meta_features(self, X) -> np.ndarray:
        return level1_meta_features(self.level1, X)

    def predict_proba(self, X) -> np.ndarray:
        return self.level2.predict_proba(self.meta_features(X))

    def predict(self, X) -> np.ndarray:
        return self.level2.predict(self.meta_features(X))

    def predict_pipeline(self, X):
        """(labels, malicious probabilities) for raw rows."""
        p = self.predict_proba(X)
        return (p[:, 1] > p[:, 0]).astype(np.int64), p[:, 1]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "members": [
                {
                    "set_id": m.set_id,
                    "stats": m.stats.to_dict(),
                    "model": m.model.to_dict(),
                }
                for m in self.level1.members
            ],
            "level2": self.level2.to_dict(),
            "meta_feature_names": self.meta_feature_names,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StackedEnsemble":
        if d.get("format_version", 0) > FORMAT_VERSION:
            raise ValueError(f"unsupported ensemble format version {d.get('format_version')}")
        members = [
            Level1Member(classifiers.model_from_dict(m["model"]), FeatureStats.from_dict(m["stats"]), m["set_id"])
            for m in d["members"]
        ]
        return cls(Level1Stack(members), classifiers.model_from_dict(d["level2"]), d.get("meta_feature_names", []))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "StackedEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


def predict_pipeline(ensemble: StackedEnsemble, raw_features):
    return ensemble.predict_pipeline(raw_features)


def stratified_folds(labels, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Held-out index arrays; every fold receives rows of both classes."""
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    y = np.asarray(labels).ravel()
    rng = np.random.default_rng(seed)
    buckets: list[list[np.ndarray]] = [[] for _ in range(folds)]
    for c in (0, 1):
        idx = rng.permutation(np.flatnonzero(y == c))
        if idx.size < folds:
            raise ValueError(f"class {c} has {idx.size} rows, fewer than {folds} folds")
        for f, part in enumerate(np.array_split(idx, folds)):
            buckets[f].append(part)
    return [np.sort(np.concatenate(b)) for b in buckets]


def out_of_fold_meta(triple: TrainingSetTriple, member_specs, folds: int = 5, seed: int = 0) -> np.ndarray:
    """Meta features for T1 rows, each predicted by members fitted without that row."""
    specs = list(DEFAULT_MEMBERS if member_specs is None else member_specs)
    sets = (triple.t1, triple.t2, triple.t3)
    n = triple.t1.n_samples
    meta = np.empty((n, len(specs)))
    for held in stratified_folds(triple.t1.labels, folds, seed):
        keep = np.setdiff1d(np.arange(n), held)
        for j, ((kind, hp), ds, sid) in enumerate(zip(specs, sets, SET_IDS)):
            member = _fit_member(kind, hp, ds.subset_rows(keep), sid)
            meta[held, j] = member.malicious_proba(triple.t1.features[held])
    return meta


def fit_stacked_ensemble(
    triple: TrainingSetTriple,
    member_specs: Sequence[tuple[str, dict]] | None = None,
    level2_kind: str = DEFAULT_LEVEL2,
    level2_hyperparams: dict | None = None,
    out_of_fold: bool = False,
    folds: int = 5,
    seed: int = 0,
) -> StackedEnsemble:
    """Train level 1 on (T1, T2, T3), then level 2 on the members' probabilities.

    By default level 2 sees the members' probabilities on the same (clean T1)
    rows they were trained on. ``out_of_fold=True`` builds those rows from
    k-fold refits instead, at k times the level-1 cost.
    """
    stack = train_level1(triple, member_specs)
    if out_of_fold:
        meta = out_of_fold_meta(triple, member_specs, folds, seed)
    else:
        meta = level1_meta_features(stack, triple.t1.features)
    start = time.perf_counter()
    level2 = train_level2(meta, triple.t1.labels, level2_kind, level2_hyperparams)
    elapsed = time.perf_counter() - start
    return StackedEnsemble(stack, level2, stack.names, elapsed)


@dataclass
class GridSearchResult:
    best_hyperparams: dict
    best_score: float
    table: list[tuple[dict, float]]
    folds: int

    def to_dict(self) -> dict:
        return {
            "best_hyperparams": self.best_hyperparams,
            "best_score": self.best_score,
            "table": [{"hyperparams": hp, "score": s} for hp, s in self.table],
            "folds": self.folds,
        }


def grid_search(kind: str, grid: Sequence[dict], features, labels, folds: int = 5, seed: int = 0,
                standardize: bool = True) -> GridSearchResult:
    """Mean malicious-class F1 over stratified folds for every candidate.

    Candidates are validated up front. The winner is the first candidate (in
    grid order) with the highest mean score. With ``standardize`` each fold is
    z-scored by its own training rows.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid is empty")
    for hp in grid:
        classifiers.make_classifier(kind, **hp)
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels).ravel()
    splits = stratified_folds(y, folds, seed)
    table = []
    for hp in grid:
        scores = []
        for held in splits:
            train = np.setdiff1d(np.arange(len(y)), held)
            Xtr, Xte = X[train], X[held]
            if standardize:
                stats = fit_stats(Xtr)
                Xtr, Xte = stats.transform(Xtr), stats.transform(Xte)
            model = classifiers.fit(kind, hp, Xtr, y[train])
            scores.append(f1_per_class(y[held], model.predict(Xte))[1].f1)
        table.append((dict(hp), float(np.mean(scores))))
    best = max(range(len(table)), key=lambda i: (table[i][1], -i))
    return GridSearchResult(table[best][0], table[best][1], table, folds)
