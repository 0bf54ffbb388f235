"""
Windowed trajectory-based networks and their edge-list serialization.

A network window stores an N x N weight matrix plus a mask of present
edges. An edge is absent when its receptor had no sampled trajectories in
the window; present edges may carry weight 0.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .connectivity import EstimatorConfig, PointwiseMeasure, check_measure_inputs, psi
from .errors import FormatVersionMismatch, UnresolvedReceptor, ValidationError
from .geometry import Partition, points_in_region
from .trajectory import TrajectoryCorpus, TrajectorySegment, window_corpus

log = logging.getLogger(__name__)

DIRECTIONS = ("sampling", "transport")
EDGES_MAGIC = "# aeronet-edges v1"
EDGE_COLUMNS = ("window_id", "src", "dst", "weight")


@dataclass(frozen=True, eq=False)
class WindowedAdjacency:
    """
    One network window.

    ``weights[i, j]`` is the weight of the edge from node i to node j;
    with ``direction="sampling"`` row i is the receptor, with
    ``"transport"`` row i is the source.
    """

    window_id: str
    node_ids: tuple[str, ...]
    weights: np.ndarray
    present: np.ndarray | None = None
    direction: str = "transport"
    measure: str = "contact"
    b_area: str = "unit"

    def __post_init__(self):
        n = len(self.node_ids)
        w = np.array(self.weights, dtype=float)
        if w.shape != (n, n):
            raise ValidationError(f"weights must be {n}x{n}, got {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("weights must be finite and non-negative")
        if np.any(np.diag(w) != 0):
            raise ValidationError("adjacency diagonal must be zero")
        p = (w > 0) if self.present is None else np.array(self.present, dtype=bool)
        if p.shape != (n, n):
            raise ValidationError("present mask has the wrong shape")
        p = p.copy()
        np.fill_diagonal(p, False)
        w[~p] = 0.0
        if len(set(self.node_ids)) != n:
            raise ValidationError("node ids must be unique")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "present", p)
        object.__setattr__(self, "node_ids", tuple(self.node_ids))

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def edges(self):
        """Present edges as (src, dst, weight), row-major."""
        ii, jj = np.nonzero(self.present)
        return [(self.node_ids[i], self.node_ids[j], float(self.weights[i, j])) for i, j in zip(ii, jj)]

    def as_direction(self, direction: str) -> "WindowedAdjacency":
        if direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")
        if direction == self.direction:
            return self
        return WindowedAdjacency(self.window_id, self.node_ids, self.weights.T, self.present.T,
                                 direction, self.measure, self.b_area)

    def equals(self, other: "WindowedAdjacency") -> bool:
        return (
            self.window_id == other.window_id
            and self.node_ids == other.node_ids
            and self.direction == other.direction
            and np.array_equal(self.present, other.present)
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class NetworkSequence:
    windows: tuple[WindowedAdjacency, ...]
    node_ids: tuple[str, ...]
    direction: str = "transport"
    measure: str = "contact"
    b_area: str = "unit"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [w.window_id for w in self.windows]
        if len(set(ids)) != len(ids):
            raise ValidationError("window ids must be unique")
        if ids != sorted(ids):
            raise ValidationError("windows must be sorted by id")
        for w in self.windows:
            if w.node_ids != tuple(self.node_ids):
                raise ValidationError("all windows must share the node order")
        object.__setattr__(self, "windows", tuple(self.windows))
        object.__setattr__(self, "node_ids", tuple(self.node_ids))

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def __getitem__(self, key: int | str) -> WindowedAdjacency:
        if isinstance(key, str):
            for w in self.windows:
                if w.window_id == key:
                    return w
            raise KeyError(key)
        return self.windows[key]

    def as_direction(self, direction: str) -> "NetworkSequence":
        return NetworkSequence(tuple(w.as_direction(direction) for w in self.windows), self.node_ids,
                               direction, self.measure, self.b_area, dict(self.meta))

    def equals(self, other: "NetworkSequence") -> bool:
        return (
            self.node_ids == other.node_ids
            and self.direction == other.direction
            and self.measure == other.measure
            and self.b_area == other.b_area
            and len(self) == len(other)
            and all(a.equals(b) for a, b in zip(self.windows, other.windows))
        )


# ---------------------------------------------------------------------------
# construction


def resolve_receptor(seg: TrajectorySegment, partition: Partition) -> str:
    """
    Receptor region of a segment: its ``receptor_region`` field if set,
    else the region containing its origin (lowest id on shared boundaries).
    """
    if seg.receptor_region is not None:
        if seg.receptor_region not in partition:
            raise UnresolvedReceptor(seg.traj_id)
        return seg.receptor_region
    o = seg.origin
    hits = partition.locate(o.lon, o.lat)
    if not hits:
        raise UnresolvedReceptor(seg.traj_id)
    if len(hits) > 1:
        choice = min(hits)
        log.info("trajectory %s origin lies on a shared boundary of %s; using %s", seg.traj_id, hits, choice)
        return choice
    return hits[0]


def segment_scores(seg: TrajectorySegment, partition: Partition, measure: PointwiseMeasure) -> dict[int, float]:
    """Psi of one segment against every region whose bounding box it meets (others score 0)."""
    out = {}
    for k in partition.candidates(seg.bbox):
        v = psi(seg, partition[int(k)], measure)
        if v != 0.0:
            out[int(k)] = v
    return out


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    step = math.ceil(n / parts) if n else 1
    return [range(a, min(a + step, n)) for a in range(0, n, step)]


def build_window(segments: Sequence[TrajectorySegment], receptors: Sequence[int], partition: Partition,
                 measure: PointwiseMeasure, cfg: EstimatorConfig, window_id: str,
                 direction: str = "transport", threads: int = 1) -> WindowedAdjacency:
    """
    Adjacency of one window from segments and their receptor indices.

    Each segment's scores are computed independently; per-edge sums use
    compensated summation, so the result does not depend on segment order
    or thread count.
    """
    n = len(partition)
    if threads > 1 and len(segments) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(
                lambda r: [segment_scores(segments[k], partition, measure) for k in r],
                _chunks(len(segments), threads * 4),
            ))
        scores = [s for p in parts for s in p]
    else:
        scores = [segment_scores(s, partition, measure) for s in segments]
    terms: dict[tuple[int, int], list[float]] = {}
    counts = np.zeros(n, dtype=np.int64)
    for rec, sc in zip(receptors, scores):
        counts[rec] += 1
        for j, v in sc.items():
            if j != rec:
                terms.setdefault((rec, j), []).append(v)
    weights = np.zeros((n, n))
    present = np.zeros((n, n), dtype=bool)
    areas = [cfg.area_of(partition[i]) for i in range(n)]
    for i in np.flatnonzero(counts):
        present[i, :] = True
        present[i, i] = False
    for (i, j), vals in terms.items():
        weights[i, j] = cfg.T_length * areas[i] * (math.fsum(vals) / int(counts[i]))
    w = WindowedAdjacency(window_id, partition.ids, weights, present, "sampling", measure.describe(), cfg.b_area_label)
    return w.as_direction(direction)


def build_networks(corpus: TrajectoryCorpus, partition: Partition, measure: PointwiseMeasure,
                   cfg: EstimatorConfig | None = None, context: str = "whole",
                   direction: str = "transport", threads: int = 1) -> NetworkSequence:
    """
    Windowed networks of a trajectory corpus over a partition.

    For each window and receptor region i, the weight to region j is the
    integrated-connectivity estimate from the window's segments sampled in
    i. Receptors with no segments in a window get absent rows.

    Raises
    ------
    UnresolvedReceptor
        If a segment's receptor is not a partition region.
    """
    cfg = cfg or EstimatorConfig()
    if direction not in DIRECTIONS:
        raise ValidationError(f"direction must be one of {DIRECTIONS}")
    check_measure_inputs(corpus, measure)
    rec_of = {}
    for s in corpus:
        rec_of[s.traj_id] = partition.index_of(resolve_receptor(s, partition))
    windows = []
    for wid, sub in window_corpus(corpus, context).items():
        segs = list(sub)
        windows.append(build_window(segs, [rec_of[s.traj_id] for s in segs], partition, measure, cfg,
                                    wid, direction, threads))
    return NetworkSequence(tuple(windows), partition.ids, direction, measure.describe(), cfg.b_area_label,
                           {"context": context})


# ---------------------------------------------------------------------------
# edge-list I/O


def _header(seq: NetworkSequence) -> str:
    return f"{EDGES_MAGIC}; measure={seq.measure}; direction={seq.direction}; b_area={seq.b_area}"


def write_edges(seq: NetworkSequence, path, extra: dict | None = None) -> None:
    """
    Write a network sequence as an edge list.

    Layout: the version header, comment lines ``# nodes=``, ``# windows=``
    and any ``extra`` items (JSON values), the column header, then one row
    per present edge. Weights use the shortest round-trip decimal form.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(_header(seq) + "\n")
        fh.write("# nodes=" + json.dumps(list(seq.node_ids)) + "\n")
        fh.write("# windows=" + json.dumps([w.window_id for w in seq.windows]) + "\n")
        for k, v in (extra or {}).items():
            fh.write(f"# {k}=" + json.dumps(v) + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(EDGE_COLUMNS)
        for w in seq.windows:
            for src, dst, x in w.edges():
                wr.writerow([w.window_id, src, dst, repr(x)])


_HEADER_RE = re.compile(r"^# aeronet-edges v(\d+); measure=(.*); direction=(\w+); b_area=([^;]+)$")


def read_edges(path) -> NetworkSequence:
    """
    Read an edge list written by :func:`write_edges`.

    Raises
    ------
    FormatVersionMismatch
        If the first line is not a version-1 edge-list header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\r\n")
        m = _HEADER_RE.match(first)
        if not m or m.group(1) != "1":
            raise FormatVersionMismatch(f"{path}: expected '{EDGES_MAGIC}; ...' header, got {first[:60]!r}")
        measure, direction, b_area = m.group(2), m.group(3), m.group(4)
        if direction not in DIRECTIONS:
            raise FormatVersionMismatch(f"{path}: unknown direction {direction!r}")
        meta = {}
        lines = fh.read().splitlines()
    body = []
    for k, line in enumerate(lines, start=2):
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            try:
                meta[key.strip()] = json.loads(val)
            except json.JSONDecodeError:
                meta[key.strip()] = val
        else:
            body.append((k, line))
    rows = list(csv.reader([b for _, b in body]))
    if not rows or tuple(rows[0]) != EDGE_COLUMNS:
        raise FormatVersionMismatch(f"{path}: missing column header {','.join(EDGE_COLUMNS)}")
    edges = []
    for (lineno, _), row in zip(body[1:], rows[1:]):
        if not row:
            continue
        if len(row) != 4:
            raise ValidationError(f"{path}:{lineno}: expected 4 fields")
        try:
            edges.append((row[0], row[1], row[2], float(row[3])))
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad weight {row[3]!r}") from None
    nodes = meta.pop("nodes", None)
    if nodes is None:
        nodes = sorted({e[1] for e in edges} | {e[2] for e in edges})
    wids = meta.pop("windows", None)
    if wids is None:
        wids = sorted({e[0] for e in edges})
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    mats = {w: (np.zeros((n, n)), np.zeros((n, n), dtype=bool)) for w in wids}
    for wid, src, dst, x in edges:
        if wid not in mats or src not in index or dst not in index:
            raise ValidationError(f"{path}: edge ({wid}, {src}, {dst}) refers to unknown window or node")
        w, p = mats[wid]
        w[index[src], index[dst]] = x
        p[index[src], index[dst]] = True
    windows = tuple(WindowedAdjacency(wid, tuple(nodes), *mats[wid], direction, measure, b_area) for wid in sorted(wids))
    return NetworkSequence(windows, tuple(nodes), direction, measure, b_area, meta)


def write_dense(seq: NetworkSequence, directory, header: str | None = None) -> list[Path]:
    """
    One CSV matrix per window (``<window_id>.csv``): first row and column
    are node ids, absent edges are empty cells.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for w in seq.windows:
        p = d / f"{w.window_id}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            if header:
                fh.write(header.rstrip("\n") + "\n")
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["node"] + list(w.node_ids))
            for i, a in enumerate(w.node_ids):
                wr.writerow([a] + [repr(float(w.weights[i, j])) if w.present[i, j] else "" for j in range(w.n)])
        out.append(p)
    return out


def default_threads() -> int:
    return os.cpu_count() or 1
