"""Streaming micro-cluster detection on timestamped edges (MIDAS).

Two count-min sketches share hash functions: ``total`` counts every (u, v)
edge ever seen and ``current`` counts edges in the current tick, cleared
whenever the tick advances. Each arriving edge is scored with the
chi-squared statistic comparing its current-tick count with its mean
per-tick count so far::

    score = (a - s/t)**2 * t**2 / (s * (t - 1))

which is defined as 0 when ``t == 1`` or ``s == 0``.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_DEPTH = 2
DEFAULT_WIDTH = 1024


class StreamOrderError(ValueError):
    """Edges arrived with a decreasing tick."""


@dataclass(frozen=True)
class EdgeEvent:
    u: object
    v: object
    t: int


def edge_key(u, v) -> bytes:
    """Length-prefixed serialisation of an edge; ``1`` and ``"1"`` coincide."""
    a = str(u).encode()
    b = str(v).encode()
    return len(a).to_bytes(4, "little") + a + len(b).to_bytes(4, "little") + b


def derive_hash_seeds(seed: int, depth: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(depth, dtype=np.uint64)]


class CountMinSketch:
    """``depth`` x ``width`` counters with keyed BLAKE2b row hashes.

    Queries return the minimum over rows and never underestimate.
    """

    def __init__(self, depth: int = DEFAULT_DEPTH, width: int = DEFAULT_WIDTH, seed: int = 0):
        if depth < 1 or width < 1:
            raise ValueError(f"depth and width must be positive, got {depth}, {width}")
        self.depth = depth
        self.width = width
        self.hash_seeds = derive_hash_seeds(seed, depth)
        self._keys = [s.to_bytes(8, "little") for s in self.hash_seeds]
        self._rows = [[0.0] * width for _ in range(depth)]

    @property
    def counters(self) -> np.ndarray:
        return np.array(self._rows)

    def buckets(self, key) -> list[int]:
        data = key if isinstance(key, bytes) else edge_key(*key)
        w = self.width
        return [
            int.from_bytes(hashlib.blake2b(data, digest_size=8, key=k).digest(), "little") % w
            for k in self._keys
        ]

    def add(self, buckets: Sequence[int], amount: float = 1.0) -> None:
        for row, b in zip(self._rows, buckets):
            row[b] += amount

    def estimate(self, buckets: Sequence[int]) -> float:
        return min(row[b] for row, b in zip(self._rows, buckets))

    def update(self, key, amount: float = 1.0) -> None:
        if amount < 0:
            raise ValueError("count-min sketches only accept non-negative updates")
        self.add(self.buckets(key), amount)

    def query(self, key) -> float:
        return self.estimate(self.buckets(key))

    def clear(self) -> None:
        w = self.width
        self._rows = [[0.0] * w for _ in range(self.depth)]


class ExactCounter:
    """Hash-map counter with the sketch interface; the collision-free oracle."""

    def __init__(self, *_, **__):
        self._counts: dict[bytes, float] = {}

    def buckets(self, key) -> bytes:
        return key if isinstance(key, bytes) else edge_key(*key)

    def add(self, bucket: bytes, amount: float = 1.0) -> None:
        self._counts[bucket] = self._counts.get(bucket, 0.0) + amount

    def estimate(self, bucket: bytes) -> float:
        return self._counts.get(bucket, 0.0)

    def update(self, key, amount: float = 1.0) -> None:
        self.add(self.buckets(key), amount)

    def query(self, key) -> float:
        return self.estimate(self.buckets(key))

    def clear(self) -> None:
        self._counts.clear()


def cms_update(sketch, key, amount: float = 1.0):
    sketch.update(key, amount)
    return sketch


def cms_query(sketch, key) -> float:
    return sketch.query(key)


def chi2_score(a: float, s: float, t: int) -> float:
    if t <= 1 or s <= 0:
        return 0.0
    return (a - s / t) ** 2 * t * t / (s * (t - 1))


class MidasState:
    """Online MIDAS detector state.

    ``exact=True`` swaps both sketches for :class:`ExactCounter`.
    """

    def __init__(self, depth: int = DEFAULT_DEPTH, width: int = DEFAULT_WIDTH, seed: int = 0, exact: bool = False):
        factory = ExactCounter if exact else CountMinSketch
        self.total = factory(depth, width, seed)
        self.current = factory(depth, width, seed)
        self.current_tick = 0

    def score(self, u, v, t: int) -> float:
        if t < 1:
            raise ValueError(f"ticks start at 1, got {t}")
        if t < self.current_tick:
            raise StreamOrderError(f"tick {t} arrived after tick {self.current_tick}; sort the stream first")
        if t > self.current_tick:
            self.current.clear()
            self.current_tick = t
        b = self.total.buckets((u, v))
        self.total.add(b)
        self.current.add(b)
        return chi2_score(self.current.estimate(b), self.total.estimate(b), t)


def midas_score(state: MidasState, event: EdgeEvent) -> float:
    return state.score(event.u, event.v, event.t)


def score_stream(us: Sequence, vs: Sequence, ts: Sequence[int], depth: int = DEFAULT_DEPTH,
                 width: int = DEFAULT_WIDTH, seed: int = 0, exact: bool = False) -> np.ndarray:
    """Score a columnar edge stream in one pass; same result as repeated
    :meth:`MidasState.score` calls, with the per-edge work inlined."""
    n = len(ts)
    out = np.empty(n)
    if exact:
        state = MidasState(exact=True)
        for i in range(n):
            out[i] = state.score(us[i], vs[i], int(ts[i]))
        return out

    keys = [s.to_bytes(8, "little") for s in derive_hash_seeds(seed, depth)]
    total = [[0.0] * width for _ in range(depth)]
    current = [[0.0] * width for _ in range(depth)]
    rows = list(range(depth))
    blake = hashlib.blake2b
    frombytes = int.from_bytes
    tick = 0
    for i in range(n):
        t = int(ts[i])
        if t < 1:
            raise ValueError(f"ticks start at 1, got {t}")
        if t != tick:
            if t < tick:
                raise StreamOrderError(f"row {i}: tick {t} arrived after tick {tick}; sort the stream first")
            current = [[0.0] * width for _ in rows]
            tick = t
        a = str(us[i]).encode()
        b = str(vs[i]).encode()
        data = len(a).to_bytes(4, "little") + a + len(b).to_bytes(4, "little") + b
        s_min = math.inf
        a_min = math.inf
        for r in rows:
            h = frombytes(blake(data, digest_size=8, key=keys[r]).digest(), "little") % width
            tr = total[r]
            cr = current[r]
            tr[h] += 1.0
            cr[h] += 1.0
            if tr[h] < s_min:
                s_min = tr[h]
            if cr[h] < a_min:
                a_min = cr[h]
        if t == 1:
            out[i] = 0.0
        else:
            d = a_min - s_min / t
            out[i] = d * d * t * t / (s_min * (t - 1))
    return out


def process_stream(events: Iterable, depth: int = DEFAULT_DEPTH, width: int = DEFAULT_WIDTH,
                   seed: int = 0, exact: bool = False) -> list[tuple[EdgeEvent, float]]:
    """``[(event, score), ...]`` for an ordered stream of edges or (u, v, t) tuples."""
    events = [e if isinstance(e, EdgeEvent) else EdgeEvent(*e) for e in events]
    scores = score_stream([e.u for e in events], [e.v for e in events], [e.t for e in events],
                          depth, width, seed, exact)
    return list(zip(events, scores.tolist()))


def flows_to_edges(records, tick_seconds: float = 1.0) -> list[EdgeEvent]:
    """Edges keyed by IP with tick ``1 + floor((ts - min ts) / tick_seconds)``, sorted by tick."""
    if tick_seconds <= 0:
        raise ValueError("tick_seconds must be positive")
    records = list(records)
    if not records:
        return []
    t0 = min(r.timestamp for r in records)
    edges = [EdgeEvent(r.src_ip, r.dst_ip, 1 + int(math.floor((r.timestamp - t0) / tick_seconds))) for r in records]
    return sorted(edges, key=lambda e: e.t)


# --------------------------------------------------------------------------
# files and fixtures
# --------------------------------------------------------------------------


def read_edge_csv(path) -> tuple[list, list, list[int], list[int] | None]:
    """(u, v, t[, label]) columns from a CSV with a ``u,v,t`` header."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if not {"u", "v", "t"} <= set(fields):
            raise ValueError(f"{path}: edge CSV needs u,v,t columns, found {fields}")
        us, vs, ts, ys = [], [], [], []
        has_label = "label" in fields
        for row in reader:
            us.append(row["u"])
            vs.append(row["v"])
            ts.append(int(row["t"]))
            if has_label:
                ys.append(int(row["label"]))
    return us, vs, ts, (ys if has_label else None)


def write_edge_csv(path, us, vs, ts, labels=None) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "t"] + (["label"] if labels is not None else []))
        for i in range(len(ts)):
            w.writerow([us[i], vs[i], int(ts[i])] + ([int(labels[i])] if labels is not None else []))


def write_score_csv(path, us, vs, ts, scores) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "t", "score"])
        for i in range(len(ts)):
            w.writerow([us[i], vs[i], int(ts[i]), repr(float(scores[i]))])


def synthetic_burst_stream(n_ticks: int = 200, edges_per_tick: float = 400.0, n_pairs: int = 300,
                           n_bursts: int = 10, burst_pairs: int = 3, burst_size: int = 60,
                           seed: int = 0):
    """Poisson background traffic plus injected micro-cluster bursts.

    Background edges come from a fixed pool of ``n_pairs`` node pairs with
    Poisson(``edges_per_tick``) arrivals per tick. Each burst adds
    ``burst_size`` edges spread over ``burst_pairs`` fresh pairs in a single
    tick (drawn from the second half of the stream). Burst edges are
    shuffled into their tick.

    Returns ``(u, v, t, label)`` numpy arrays with label 1 on burst edges.
    """
    rng = np.random.default_rng(seed)
    n_nodes = max(8, int(math.isqrt(n_pairs) * 3))
    pool_src = rng.integers(0, n_nodes, size=n_pairs)
    pool_dst = rng.integers(0, n_nodes, size=n_pairs)
    pair_weights = rng.dirichlet(np.full(n_pairs, 2.0))
    counts = rng.poisson(edges_per_tick, size=n_ticks)
    ts = np.repeat(np.arange(1, n_ticks + 1), counts)
    pick = rng.choice(n_pairs, size=ts.size, p=pair_weights)
    us = pool_src[pick].astype(np.int64)
    vs = pool_dst[pick].astype(np.int64)
    labels = np.zeros(ts.size, dtype=np.int64)

    burst_ticks = rng.choice(np.arange(n_ticks // 2, n_ticks) + 1, size=n_bursts, replace=False)
    b_u, b_v, b_t = [], [], []
    next_node = n_nodes
    for bt in burst_ticks:
        src = np.arange(next_node, next_node + burst_pairs)
        dst = np.arange(next_node + burst_pairs, next_node + 2 * burst_pairs)
        next_node += 2 * burst_pairs
        which = rng.integers(0, burst_pairs, size=burst_size)
        b_u.append(src[which])
        b_v.append(dst[which])
        b_t.append(np.full(burst_size, bt))
    if n_bursts:
        us = np.concatenate([us, *b_u])
        vs = np.concatenate([vs, *b_v])
        ts = np.concatenate([ts, *b_t])
        labels = np.concatenate([labels, np.ones(n_bursts * burst_size, dtype=np.int64)])
    # random order within each tick, ticks ascending
    order = np.lexsort((rng.random(ts.size), ts))
    return us[order], vs[order], ts[order], labels[order]


def uniform_stream(n_events: int, n_ticks: int, n_nodes: int = 1000, seed: int = 0):
    """Throughput fixture: uniformly random edges over ``n_ticks`` equal ticks."""
    rng = np.random.default_rng(seed)
    us = rng.integers(0, n_nodes, size=n_events)
    vs = rng.integers(0, n_nodes, size=n_events)
    ts = 1 + (np.arange(n_events) * n_ticks) // n_events
    return us, vs, ts
