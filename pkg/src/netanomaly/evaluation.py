"""Per-class F1, rank AUC, ROC points, fit timing and report tables.

Class 1 (malicious) is the positive class throughout. Reports list F1 as
``[normal, malicious]``.
"""

from __future__ import annotations

import csv
import json
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import classifiers
from .dataset import Dataset, FeatureStats

REPORT_VERSION = 1
TIMING_FIELDS = ("train_seconds", "hardware")


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float


def _check_pair(labels, predictions):
    y = np.asarray(labels).ravel()
    p = np.asarray(predictions).ravel()
    if y.shape != p.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} labels vs {p.shape[0]} predictions")
    return y, p


def confusion(labels, predictions) -> ConfusionCounts:
    y, p = _check_pair(labels, predictions)
    return ConfusionCounts(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


def _scores(tp, fp, fn) -> ClassScores:
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return ClassScores(prec, rec, f1)


def f1_per_class(labels, predictions) -> dict[int, ClassScores]:
    """Precision, recall and F1 for class 0 and class 1 (undefined -> 0)."""
    c = confusion(labels, predictions)
    return {0: _scores(c.tn, c.fn, c.fp), 1: _scores(c.tp, c.fp, c.fn)}


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean rank."""
    _, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    return ((starts + ends) / 2.0)[inv]


def auc(labels, scores) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    y, s = _check_pair(labels, scores)
    pos = y == 1
    n1 = int(pos.sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes")
    r = average_ranks(s.astype(float))
    return float((r[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def roc_points(labels, scores):
    """ROC vertices ``(fpr, tpr, threshold)`` from (0, 0) to (1, 1).

    A row is predicted positive when ``score >= threshold``; the first point
    uses threshold ``+inf``.
    """
    y, s = _check_pair(labels, scores)
    n1 = int((y == 1).sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), len(s) - 1]
    tps = np.cumsum(y_sorted)[last]
    fps = (last + 1) - tps
    fpr = np.r_[0.0, fps / n0]
    tpr = np.r_[0.0, tps / n1]
    thr = np.r_[np.inf, s_sorted[last]]
    return fpr, tpr, thr


def write_roc_csv(path, fpr, tpr, thr) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr", "threshold"])
        for a, b, c in zip(fpr, tpr, thr):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])


def hardware_descriptor() -> str:
    return f"{platform.machine()} {platform.processor() or 'cpu'} x{os.cpu_count()} / {platform.python_implementation()} {platform.python_version()}"


@dataclass
class MetricsReport:
    name: str
    per_class: dict[int, ClassScores]
    auc: float | None
    confusion: ConfusionCounts
    train_seconds: float | None = None
    metadata: dict = field(default_factory=dict)
    hardware: str = field(default_factory=hardware_descriptor)

    @property
    def f1_pair(self) -> list[float]:
        return [self.per_class[0].f1, self.per_class[1].f1]

    def to_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "name": self.name,
            "per_class": {str(k): asdict(v) for k, v in self.per_class.items()},
            "f1": self.f1_pair,
            "auc": self.auc,
            "confusion": asdict(self.confusion),
            "train_seconds": self.train_seconds,
            "metadata": self.metadata,
            "hardware": self.hardware,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            name=d["name"],
            per_class={int(k): ClassScores(**v) for k, v in d["per_class"].items()},
            auc=d["auc"],
            confusion=ConfusionCounts(**d["confusion"]),
            train_seconds=d["train_seconds"],
            metadata=d.get("metadata", {}),
            hardware=d.get("hardware", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls.from_dict(json.loads(text))


def strip_timing(obj):
    """Copy of a JSON-like structure with timing/hardware fields removed."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS and "per_sec" not in k and k != "elapsed_seconds"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def timed_fit(kind: str, hyperparams: dict | None, features, labels):
    """Fit a fresh model, timing only the fit call (monotonic clock)."""
    model = classifiers.make_classifier(kind, **(hyperparams or {}))
    start = time.perf_counter()
    model.fit(features, labels)
    return model, time.perf_counter() - start


def report_from_scores(name, labels, probabilities, train_seconds=None, metadata=None) -> MetricsReport:
    """Report for malicious-class probabilities thresholded by argmax (p > 0.5)."""
    y = np.asarray(labels).ravel()
    p = np.asarray(probabilities, dtype=float).ravel()
    pred = (p > 0.5).astype(np.int64)
    both = 0 < int(y.sum()) < len(y)
    return MetricsReport(
        name=name,
        per_class=f1_per_class(y, pred),
        auc=auc(y, p) if both else None,
        confusion=confusion(y, pred),
        train_seconds=train_seconds,
        metadata=dict(metadata or {}),
    )


@dataclass
class EvalEntry:
    """A fitted model plus the stats that standardize test rows for it."""

    model: object
    stats: FeatureStats | None = None
    train_seconds: float | None = None
    metadata: dict = field(default_factory=dict)


def evaluate_matrix(models: Mapping[str, object], test: Dataset, roc: bool = False):
    """Score every model on the fixed test set.

    ``models`` maps a name to a fitted model or an :class:`EvalEntry`. Returns
    the reports in input order and, with ``roc=True``, a name -> ROC points map.
    """
    reports: list[MetricsReport] = []
    curves = {}
    for name, entry in models.items():
        if not isinstance(entry, EvalEntry):
            entry = EvalEntry(entry)
        X = test.features if entry.stats is None else entry.stats.transform(test.features)
        p = entry.model.predict_proba(X)[:, 1]
        reports.append(report_from_scores(name, test.labels, p, entry.train_seconds, entry.metadata))
        if roc:
            curves[name] = roc_points(test.labels, p)
    return (reports, curves) if roc else reports


def format_table(title: str, cells: Mapping[str, Mapping[str, object]], columns: Sequence[str] = ("T1", "T2", "T3")) -> str:
    """Aligned text table: one row per classifier, one column per training set.

    Cell values may be floats, ``[f1_normal, f1_malicious]`` pairs, or strings.
    """

    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(f"{x:.3f}" for x in v) + "]"
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    rows = [["Classifier", *columns]]
    for name, row in cells.items():
        rows.append([name, *(fmt(row.get(c)) for c in columns)])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = [title]
    for i, r in enumerate(rows):
        lines.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
