"""Flow-record ingest, cleaning, nominal encoding, feature selection and scaling.

The typical path from a raw flow CSV to a model-ready matrix is::

    schema = Schema.from_file("unsw.schema")
    records = load_flow_csv("flows.csv", schema)
    kept, dropped = clean(records)
    ds = encode_nominal(kept, schema)
    ds, report = select_features(ds, top_k=5, corr_threshold=0.85)
    train, test = train_test_split(ds, 0.25, seed=0, stratified=True)
    train, (test,), stats = standardize(train, [test])
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

COLUMN_KINDS = ("numeric", "nominal", "ip", "port", "timestamp", "label", "category")
PORT_MAX = 65535
MI_BINS = 20


class SchemaError(ValueError):
    """Raised when a CSV does not match its declared schema."""


# --------------------------------------------------------------------------
# schema and records
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    keep: bool = True

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r} for column {self.name!r}")


@dataclass
class Schema:
    """Ordered column declarations for a flow CSV.

    The text format is one column per line, ``name,kind,keep|drop``; blank
    lines and ``#`` comments are ignored. ``keep``/``drop`` only decides
    whether the column becomes a model feature. ip, port and timestamp
    columns are always parsed because the graph detector needs them.
    """

    columns: list[Column]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        if sum(c.kind == "label" for c in self.columns) > 1:
            raise SchemaError("schema declares more than one label column")

    @classmethod
    def from_file(cls, path) -> "Schema":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"schema file not found: {path}")
        return cls.from_text(path.read_text(), source=str(path))

    @classmethod
    def from_text(cls, text: str, source: str = "<schema>") -> "Schema":
        columns = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) not in (2, 3):
                raise SchemaError(f"{source}:{lineno}: expected 'name,kind[,keep|drop]'")
            flag = parts[2].lower() if len(parts) == 3 else "keep"
            if flag not in ("keep", "drop"):
                raise SchemaError(f"{source}:{lineno}: flag must be keep or drop, got {flag!r}")
            columns.append(Column(parts[0], parts[1].lower(), flag == "keep"))
        return cls(columns)

    def to_text(self) -> str:
        return "".join(f"{c.name},{c.kind},{'keep' if c.keep else 'drop'}\n" for c in self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def of_kind(self, *kinds: str) -> list[Column]:
        return [c for c in self.columns if c.kind in kinds]

    @property
    def feature_columns(self) -> list[Column]:
        """Kept columns that become model features, in file order."""
        return [c for c in self.columns if c.keep and c.kind not in ("label", "category")]


@dataclass
class FlowRecord:
    """One parsed flow row.

    ``numeric`` holds every numeric/port/timestamp cell by column name (NaN
    when the cell did not parse); ``nominal`` holds every nominal/ip token.
    The role fields duplicate the first ip/port/timestamp columns.
    """

    timestamp: float | None = None
    src_ip: str | None = None
    dst_ip: str | None = None
    src_port: float | None = None
    dst_port: float | None = None
    protocol: str | None = None
    numeric: dict[str, float] = field(default_factory=dict)
    nominal: dict[str, str] = field(default_factory=dict)
    label: int | None = None
    attack_category: str | None = None
    row: int = 0
    issues: list[str] = field(default_factory=list)


def _parse_float(cell: str) -> float:
    cell = cell.strip()
    if cell == "":
        return math.nan
    try:
        return float(cell)
    except ValueError:
        pass
    try:
        # some flow exports write ports in hex
        return float(int(cell, 0))
    except ValueError:
        return math.nan


def load_flow_csv(path, schema: Schema, has_header: bool = True) -> list[FlowRecord]:
    """Parse a flow CSV into records.

    Cells that fail to parse are recorded in ``FlowRecord.issues`` and logged;
    the row is still returned so that :func:`clean` can account for it.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        SchemaError: header differs from the schema, or a row has the wrong
            number of cells (the message carries the line number).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"flow CSV not found: {path}")
    ncols = len(schema.columns)
    ips = [c.name for c in schema.of_kind("ip")]
    ports = [c.name for c in schema.of_kind("port")]
    stamps = [c.name for c in schema.of_kind("timestamp")]
    proto = next((c.name for c in schema.of_kind("nominal") if c.name.lower() in ("proto", "protocol")), None)

    records = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        lineno = 0
        if has_header:
            header = next(reader, None)
            lineno = 1
            if header is None:
                raise SchemaError(f"{path}: empty file, expected a header")
            header = [h.strip() for h in header]
            if header != schema.names:
                missing = [n for n in schema.names if n not in header]
                extra = [n for n in header if n not in schema.names]
                raise SchemaError(
                    f"{path}: header mismatch ({len(header)} columns, schema has {ncols}; "
                    f"missing={missing}, unexpected={extra})"
                )
        for cells in reader:
            lineno += 1
            if not cells:
                continue
            if len(cells) != ncols:
                raise SchemaError(f"{path}:{lineno}: expected {ncols} columns, found {len(cells)}")
            rec = FlowRecord(row=lineno)
            for col, cell in zip(schema.columns, cells):
                kind = col.kind
                if kind in ("numeric", "port", "timestamp"):
                    val = _parse_float(cell)
                    if math.isnan(val):
                        rec.issues.append(f"column {col.name!r}: unparseable value {cell!r}")
                    rec.numeric[col.name] = val
                elif kind in ("nominal", "ip"):
                    rec.nominal[col.name] = cell.strip()
                elif kind == "label":
                    val = _parse_float(cell)
                    if val in (0.0, 1.0):
                        rec.label = int(val)
                    else:
                        rec.issues.append(f"label {cell!r} is not 0/1")
                elif kind == "category":
                    rec.attack_category = cell.strip() or None
            if ips:
                rec.src_ip = rec.nominal[ips[0]]
            if len(ips) > 1:
                rec.dst_ip = rec.nominal[ips[1]]
            if ports:
                rec.src_port = rec.numeric[ports[0]]
            if len(ports) > 1:
                rec.dst_port = rec.numeric[ports[1]]
            if stamps:
                rec.timestamp = rec.numeric[stamps[0]]
            if proto is not None:
                rec.protocol = rec.nominal[proto]
            if rec.issues:
                logger.warning("%s:%d: %s", path, lineno, "; ".join(rec.issues))
            records.append(rec)
    return records


def write_flow_csv(path, records: Sequence[FlowRecord], schema: Schema) -> None:
    """Inverse of :func:`load_flow_csv` (with header)."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(schema.names)
        for r in records:
            row = []
            for col in schema.columns:
                if col.kind in ("numeric", "port", "timestamp"):
                    row.append(_fmt_number(r.numeric[col.name]))
                elif col.kind in ("nominal", "ip"):
                    row.append(r.nominal[col.name])
                elif col.kind == "label":
                    row.append("" if r.label is None else str(r.label))
                else:
                    row.append(r.attack_category or "")
            w.writerow(row)


def _fmt_number(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _record_valid(r: FlowRecord, port_names: set[str]) -> bool:
    if r.issues or r.label not in (0, 1):
        return False
    for name, v in r.numeric.items():
        if math.isnan(v) or v < 0:
            return False
        if name in port_names and v > PORT_MAX:
            return False
    for p in (r.src_port, r.dst_port):
        if p is not None and not 0 <= p <= PORT_MAX:
            return False
    return True


def clean(records: Sequence[FlowRecord], port_columns: Iterable[str] = ()) -> tuple[list[FlowRecord], int]:
    """Drop rows that violate the record invariants.

    A row is dropped when it had parse issues, a label outside {0, 1}, any
    negative numeric value, or a port outside [0, 65535]. ``port_columns``
    names extra port columns beyond the src/dst role fields.
    """
    port_names = set(port_columns)
    kept = [r for r in records if _record_valid(r, port_names)]
    return kept, len(records) - len(kept)


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------


@dataclass
class FeatureStats:
    means: np.ndarray
    stds: np.ndarray
    constant_mask: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.means.shape[0]:
            raise ValueError(f"expected {self.means.shape[0]} columns, got {X.shape[-1]}")
        out = X.copy()
        live = ~self.constant_mask
        out[:, live] = (X[:, live] - self.means[live]) / self.stds[live]
        return out

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        out = Z.copy()
        live = ~self.constant_mask
        out[:, live] = Z[:, live] * self.stds[live] + self.means[live]
        return out

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "constant_mask": self.constant_mask.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureStats":
        return cls(
            np.asarray(d["means"], dtype=float),
            np.asarray(d["stds"], dtype=float),
            np.asarray(d["constant_mask"], dtype=bool),
        )


@dataclass
class Dataset:
    """Feature matrix, binary labels and the bookkeeping that produced them."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    nominal_maps: dict[str, dict[str, int]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            self.features = self.features.reshape(len(self.features), -1)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        self.feature_names = list(self.feature_names)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels")
        if len(self.feature_names) != self.features.shape[1]:
            raise ValueError(f"{len(self.feature_names)} names for {self.features.shape[1]} columns")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        for name, mapping in self.nominal_maps.items():
            if len(set(mapping.values())) != len(mapping):
                raise ValueError(f"nominal map for {name!r} is not injective")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset_rows(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return replace(self, features=self.features[idx], labels=self.labels[idx], meta=dict(self.meta))

    def subset_columns(self, cols: Sequence[int]) -> "Dataset":
        cols = list(cols)
        names = [self.feature_names[j] for j in cols]
        maps = {k: v for k, v in self.nominal_maps.items() if k in names}
        return replace(self, features=self.features[:, cols], feature_names=names, nominal_maps=maps, meta=dict(self.meta))

    def with_features(self, X: np.ndarray) -> "Dataset":
        return replace(self, features=np.asarray(X, dtype=float), labels=self.labels.copy(), meta=dict(self.meta))

    def column_indices(self, names: Iterable[str]) -> list[int]:
        lookup = {n: j for j, n in enumerate(self.feature_names)}
        try:
            return [lookup[n] for n in names]
        except KeyError as exc:
            raise KeyError(f"unknown feature name {exc.args[0]!r}") from None


def save_dataset(ds: Dataset, path) -> tuple[Path, Path]:
    """Write ``path`` (CSV, features then ``label``) and ``path.json`` sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + ["label"])
        for row, y in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(y)])
    sidecar = path.with_suffix(path.suffix + ".json")
    payload = {
        "feature_names": ds.feature_names,
        "nominal_maps": ds.nominal_maps,
        "n_samples": ds.n_samples,
        "meta": ds.meta,
    }
    sidecar.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path, sidecar


def load_dataset(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset CSV not found: {path}")
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "label":
            raise SchemaError(f"{path}: last column must be 'label'")
        rows = [r for r in reader if r]
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return Dataset(
        features=arr[:, :-1],
        labels=arr[:, -1].astype(np.int64),
        feature_names=header[:-1],
        nominal_maps=meta.get("nominal_maps", {}),
        meta=meta.get("meta", {}),
    )


# --------------------------------------------------------------------------
# encoding
# --------------------------------------------------------------------------


def build_nominal_map(tokens: Iterable[str]) -> dict[str, int]:
    """Token -> code in descending frequency, ties broken lexicographically."""
    counts = Counter(tokens)
    order = sorted(counts, key=lambda t: (-counts[t], t))
    return {t: i for i, t in enumerate(order)}


def encode_nominal(
    records: Sequence[FlowRecord],
    schema: Schema | None = None,
    nominal_maps: dict[str, dict[str, int]] | None = None,
) -> Dataset:
    """Turn cleaned records into a numeric :class:`Dataset`.

    Each nominal (or ip) feature becomes one integer column. Passing the
    ``nominal_maps`` of a previous call reproduces its encoding; tokens unseen
    by a supplied map get fresh codes appended after the existing ones.
    """
    if schema is not None:
        cols = [(c.name, c.kind in ("nominal", "ip")) for c in schema.feature_columns]
    elif records:
        first = records[0]
        cols = [(n, False) for n in first.numeric] + [(n, True) for n in first.nominal]
    else:
        cols = []

    maps: dict[str, dict[str, int]] = {}
    columns = []
    for name, is_nominal in cols:
        if is_nominal:
            tokens = [r.nominal[name] for r in records]
            if nominal_maps and name in nominal_maps:
                mapping = dict(nominal_maps[name])
                for t in sorted(set(tokens) - mapping.keys()):
                    mapping[t] = len(mapping)
            else:
                mapping = build_nominal_map(tokens)
            maps[name] = mapping
            columns.append(np.array([mapping[t] for t in tokens], dtype=float))
        else:
            columns.append(np.array([r.numeric[name] for r in records], dtype=float))
    X = np.column_stack(columns) if columns else np.zeros((len(records), 0))
    y = np.array([r.label for r in records], dtype=np.int64)
    return Dataset(X, y, [n for n, _ in cols], maps)


# --------------------------------------------------------------------------
# feature scoring and selection
# --------------------------------------------------------------------------


def _minmax(X: np.ndarray) -> np.ndarray:
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    return (X - lo) / span


def chi2_scores(features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Feature-selection chi-squared statistic per column.

    Columns are min-max scaled to [0, 1] and treated as per-class "counts":
    observed = per-class column sums, expected = class prior times the column
    total. All-zero (after scaling, i.e. constant) columns score 0.
    """
    X = _minmax(np.asarray(features, dtype=float))
    y = np.asarray(labels).ravel()
    classes = np.unique(y)
    observed = np.stack([X[y == c].sum(axis=0) for c in classes])
    prior = np.array([(y == c).mean() for c in classes])
    expected = np.outer(prior, X.sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    return terms.sum(axis=0)


def equal_frequency_bins(col: np.ndarray, n_bins: int = MI_BINS) -> np.ndarray:
    """Bin ids from interior quantile edges; tied values always share a bin."""
    edges = np.unique(np.quantile(col, np.linspace(0, 1, n_bins + 1)[1:-1]))
    return np.searchsorted(edges, col, side="right")


def discrete_mutual_info(a: np.ndarray, b: np.ndarray) -> float:
    """Plug-in mutual information (nats) of two discrete label arrays."""
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= joint.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])))


def mutual_info_scores(features: np.ndarray, labels: np.ndarray, n_bins: int = MI_BINS) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("mutual information needs at least 2 samples")
    y = np.asarray(labels).ravel()
    return np.array([discrete_mutual_info(equal_frequency_bins(X[:, j], n_bins), y) for j in range(X.shape[1])])


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    return 0.0 if den == 0 else float(a @ b) / den


def correlation_filter(features: np.ndarray, threshold: float = 0.85, return_drops: bool = False):
    """Greedy left-to-right correlation pruning.

    Column j is dropped when |r| with any earlier kept column exceeds
    ``threshold``. Constant columns correlate 0 with everything.
    With ``return_drops`` also returns ``[(dropped, kept_partner, r), ...]``.
    """
    X = np.asarray(features, dtype=float)
    kept: list[int] = []
    drops = []
    for j in range(X.shape[1]):
        for i in kept:
            r = _pearson(X[:, i], X[:, j])
            if abs(r) > threshold:
                drops.append((j, i, r))
                break
        else:
            kept.append(j)
    return (kept, drops) if return_drops else kept


def select_features(dataset: Dataset, top_k: int, corr_threshold: float = 0.85) -> tuple[Dataset, dict]:
    """Keep the union of the top-k columns by chi-squared and by mutual
    information, then prune correlated columns.

    Returns the reduced dataset and a JSON-ready selection report.
    """
    m = dataset.n_features
    if not 1 <= top_k <= m:
        raise ValueError(f"top_k must be in [1, {m}], got {top_k}")
    X, y = dataset.features, dataset.labels
    chi = chi2_scores(X, y)
    mi = mutual_info_scores(X, y)
    # stable sorts: equal scores keep column order
    top_chi = sorted(np.argsort(-chi, kind="stable")[:top_k].tolist())
    top_mi = sorted(np.argsort(-mi, kind="stable")[:top_k].tolist())
    union = sorted(set(top_chi) | set(top_mi))
    kept_local, drops = correlation_filter(X[:, union], corr_threshold, return_drops=True)
    kept = [union[j] for j in kept_local]
    names = dataset.feature_names
    report = {
        "top_k": top_k,
        "corr_threshold": corr_threshold,
        "chi2": dict(zip(names, chi.tolist())),
        "mutual_info": dict(zip(names, mi.tolist())),
        "top_chi2": [names[j] for j in top_chi],
        "top_mutual_info": [names[j] for j in top_mi],
        "correlation_drops": [
            {"dropped": names[union[a]], "kept": names[union[b]], "r": r} for a, b, r in drops
        ],
        "selected": [names[j] for j in kept],
        "n_before": m,
        "n_after": len(kept),
    }
    out = dataset.subset_columns(kept)
    out.meta["selection"] = report
    return out, report


# --------------------------------------------------------------------------
# scaling and splitting
# --------------------------------------------------------------------------


def fit_stats(X: np.ndarray) -> FeatureStats:
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = np.all(X == X[:1], axis=0) if len(X) else np.ones(X.shape[1], dtype=bool)
    stds = np.where(constant, 1.0, stds)
    return FeatureStats(means, stds, constant)


def standardize(train: Dataset, others: Sequence[Dataset] = ()) -> tuple[Dataset, list[Dataset], FeatureStats]:
    """Z-score every dataset with the training set's population statistics.

    Constant training columns pass through untouched (``constant_mask``).
    """
    for o in others:
        if o.feature_names != train.feature_names:
            raise ValueError("feature names differ between training and other datasets")
    stats = fit_stats(train.features)
    return (
        train.with_features(stats.transform(train.features)),
        [o.with_features(stats.transform(o.features)) for o in others],
        stats,
    )


def train_test_split(dataset: Dataset, test_fraction: float, seed: int = 0, stratified: bool = True) -> tuple[Dataset, Dataset]:
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    n = dataset.n_samples
    if stratified:
        test_idx = []
        for c in (0, 1):
            idx = np.flatnonzero(dataset.labels == c)
            if idx.size == 0:
                raise ValueError(f"class {c} has no rows; cannot stratify")
            take = int(round(test_fraction * idx.size))
            test_idx.append(rng.permutation(idx)[:take])
        test_idx = np.concatenate(test_idx)
    else:
        test_idx = rng.permutation(n)[: int(round(test_fraction * n))]
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    return dataset.subset_rows(np.flatnonzero(~mask)), dataset.subset_rows(np.flatnonzero(mask))


# --------------------------------------------------------------------------
# synthetic data
# --------------------------------------------------------------------------

_SYNTH_TOKENS = ("tcp", "udp", "dns", "icmp")
_SYNTH_BASE = np.array([0.55, 0.25, 0.15, 0.05])
_SYNTH_SKEW = np.array([0.10, 0.20, 0.60, 0.10])


def synth_generate(n_normal: int, n_malicious: int, m: int = 10, separation: float = 4.0, seed: int = 0) -> Dataset:
    """Two unit-variance Gaussian classes plus one nominal ``proto`` column.

    Malicious means sit ``separation`` above the normal means on every numeric
    feature. The nominal column drifts from a shared token mix towards a
    malicious-heavy mix with weight ``1 - exp(-separation)``, so at
    separation 0 the classes are indistinguishable on every column.
    """
    if min(n_normal, n_malicious, m) < 1:
        raise ValueError("n_normal, n_malicious and m must be positive")
    rng = np.random.default_rng(seed)
    X0 = rng.standard_normal((n_normal, m))
    X1 = rng.standard_normal((n_malicious, m)) + separation
    w = 1.0 - math.exp(-abs(separation))
    mal_probs = (1 - w) * _SYNTH_BASE + w * _SYNTH_SKEW
    t0 = rng.choice(len(_SYNTH_TOKENS), size=n_normal, p=_SYNTH_BASE)
    t1 = rng.choice(len(_SYNTH_TOKENS), size=n_malicious, p=mal_probs)
    tokens = [_SYNTH_TOKENS[i] for i in np.concatenate([t0, t1])]
    mapping = build_nominal_map(tokens)
    proto = np.array([mapping[t] for t in tokens], dtype=float)
    X = np.column_stack([np.vstack([X0, X1]), proto])
    y = np.concatenate([np.zeros(n_normal, dtype=np.int64), np.ones(n_malicious, dtype=np.int64)])
    perm = rng.permutation(len(y))
    names = [f"f{j}" for j in range(m)] + ["proto"]
    return Dataset(X[perm], y[perm], names, {"proto": mapping}, {"source": "synth", "seed": seed, "separation": separation})


SYNTH_FLOW_SCHEMA = """\
# name,kind,keep|drop
srcip,ip,drop
sport,port,keep
dstip,ip,drop
dsport,port,keep
proto,nominal,keep
state,nominal,keep
service,nominal,keep
dur,numeric,keep
sbytes,numeric,keep
dbytes,numeric,keep
sttl,numeric,keep
dttl,numeric,keep
spkts,numeric,keep
dpkts,numeric,keep
smean,numeric,keep
sbytes_total,numeric,keep
ct_srv_src,numeric,drop
stime,timestamp,drop
attack_cat,category,drop
label,label,drop
"""


def synth_flows(n: int = 5000, malicious_fraction: float = 0.12, duration: float = 600.0, n_invalid: int = 5,
                seed: int = 0) -> tuple[Schema, list[FlowRecord]]:
    """Flow-record fixture shaped like a small intrusion-detection capture.

    Normal flows run between a pool of clients and servers; malicious flows
    come in short DNS-heavy bursts from a few attacker hosts towards one
    victim. ``sbytes_total`` nearly duplicates ``sbytes`` so correlation
    pruning has something to remove, and ``n_invalid`` rows carry an
    impossible source port or a negative byte count for cleaning to drop.
    Records are in timestamp order.
    """
    schema = Schema.from_text(SYNTH_FLOW_SCHEMA)
    rng = np.random.default_rng(seed)
    n_mal = int(round(malicious_fraction * n))
    n_norm = n - n_mal
    clients = [f"10.0.{i // 250}.{i % 250 + 1}" for i in range(60)]
    servers = [f"192.168.1.{i + 1}" for i in range(12)]
    attackers = [f"175.45.176.{i + 1}" for i in range(4)]
    victim = "192.168.1.200"

    def block(count, malicious):
        if malicious:
            n_bursts = max(1, count // 40)
            centres = rng.uniform(0.3 * duration, duration, size=n_bursts)
            stamps = np.clip(centres[rng.integers(n_bursts, size=count)] + rng.exponential(1.5, count), 0, duration)
            src = [attackers[i] for i in rng.integers(len(attackers), size=count)]
            dst = [victim] * count
            proto = rng.choice(["udp", "tcp", "unas"], size=count, p=[0.6, 0.3, 0.1])
            service = np.where(proto == "udp", "dns", rng.choice(["-", "http"], size=count))
            state = rng.choice(["INT", "CON", "FIN"], size=count, p=[0.7, 0.1, 0.2])
            shift, ttl = 1.5, rng.choice([254.0, 62.0], size=count, p=[0.8, 0.2])
            cats = rng.choice(["Exploits", "Fuzzers", "Reconnaissance", "DoS"], size=count)
        else:
            stamps = rng.uniform(0, duration, size=count)
            src = [clients[i] for i in rng.integers(len(clients), size=count)]
            dst = [servers[i] for i in rng.integers(len(servers), size=count)]
            proto = rng.choice(["tcp", "udp"], size=count, p=[0.8, 0.2])
            service = np.where(proto == "udp", rng.choice(["dns", "-"], size=count), rng.choice(["http", "ftp", "-"], size=count))
            state = rng.choice(["FIN", "CON", "INT"], size=count, p=[0.7, 0.25, 0.05])
            shift, ttl = 0.0, rng.choice([31.0, 62.0], size=count, p=[0.6, 0.4])
            cats = [""] * count
        spkts = np.maximum(1, np.round(np.exp(rng.normal(2.0 - 0.8 * shift, 0.6, count))))
        sbytes = np.round(spkts * np.exp(rng.normal(4.5 + 0.4 * shift, 0.5, count)))
        dpkts = np.round(np.exp(rng.normal(2.0 - 1.2 * shift, 0.7, count)))
        dbytes = np.round(dpkts * np.exp(rng.normal(5.0, 0.6, count)))
        out = []
        for i in range(count):
            numeric = {
                "sport": float(rng.integers(1024, 65536)),
                "dsport": float(53 if service[i] == "dns" else rng.choice([80, 21, 443, 8080])),
                "dur": float(np.round(rng.exponential(0.4 if shift else 1.2), 6)),
                "sbytes": float(sbytes[i]),
                "dbytes": float(dbytes[i]),
                "sttl": float(ttl[i]),
                "dttl": float(rng.choice([29.0, 60.0, 252.0])),
                "spkts": float(spkts[i]),
                "dpkts": float(dpkts[i]),
                "smean": float(np.round(sbytes[i] / spkts[i])),
                "sbytes_total": float(sbytes[i] + rng.integers(0, 3)),
                "ct_srv_src": float(rng.integers(1, 10)),
                "stime": float(np.round(1_421_927_414 + stamps[i], 3)),
            }
            nominal = {"srcip": src[i], "dstip": dst[i], "proto": str(proto[i]), "state": str(state[i]), "service": str(service[i])}
            out.append(FlowRecord(
                timestamp=numeric["stime"], src_ip=src[i], dst_ip=dst[i],
                src_port=numeric["sport"], dst_port=numeric["dsport"], protocol=str(proto[i]),
                numeric=numeric, nominal=nominal, label=int(malicious), attack_category=cats[i] or None,
            ))
        return out

    records = block(n_norm, False) + block(n_mal, True)
    for i in rng.choice(len(records), size=min(n_invalid, len(records)), replace=False):
        if rng.random() < 0.5:
            records[i].numeric["sport"] = 99999999.0
            records[i].src_port = 99999999.0
        else:
            records[i].numeric["sbytes"] = -1.0
    records.sort(key=lambda r: r.timestamp)
    for row, r in enumerate(records, start=2):
        r.row = row
    return schema, records
