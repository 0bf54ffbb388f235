"""
Network indices, complete-linkage clustering of index vectors, and the
edge-category statistics (distance samples, bearing histograms).

Functions accept a :class:`~aeronet.network.WindowedAdjacency` or a plain
square array; absent edges count as weight 0 and only positive weights
are edges.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import (
    AeronetError,
    DegenerateNull,
    IncompleteVectors,
    InsufficientDegrees,
    NoEdges,
    NoTriplets,
    TooFewEdges,
    TooFewNodes,
    ValidationError,
    ZeroVariance,
)
from .geometry import Partition, haversine_km_arr, initial_bearing_deg_arr

COST_MODES = ("reciprocal", "direct")
INDEX_FIELDS = ("diam", "dens", "trans", "sp_mean", "sp_sd", "sw", "sf_alpha", "dc")
PROVENANCE_FIELDS = ("cost_mode", "null_seed", "n_null", "unreachable_pairs")


def _matrix(w) -> np.ndarray:
    m = np.array(getattr(w, "weights", w), dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("adjacency must be a square matrix")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise ValidationError("weights must be finite and non-negative")
    np.fill_diagonal(m, 0.0)
    return m


# ---------------------------------------------------------------------------
# indices


def density(w) -> float:
    """Sum of edge weights over the N(N-1) possible directed edges."""
    m = _matrix(w)
    n = len(m)
    if n < 2:
        raise TooFewNodes("density needs at least 2 nodes")
    return math.fsum(m.ravel().tolist()) / (n * (n - 1))


@dataclass(frozen=True)
class PathStats:
    mean: float
    sd: float
    diameter: float
    unreachable: int
    n_pairs: int


def distance_matrix(w, cost_mode: str = "reciprocal") -> np.ndarray:
    """All-pairs shortest-path costs (inf where unreachable, 0 on the diagonal)."""
    if cost_mode not in COST_MODES:
        raise ValidationError(f"cost_mode must be one of {COST_MODES}")
    m = _matrix(w)
    if len(m) < 2:
        raise TooFewNodes("shortest paths need at least 2 nodes")
    ii, jj = np.nonzero(m > 0)
    if len(ii) == 0:
        raise NoEdges("network has no edges")
    vals = m[ii, jj]
    cost = 1.0 / vals if cost_mode == "reciprocal" else vals
    g = csr_matrix((cost, (ii, jj)), shape=m.shape)
    return dijkstra(g, directed=True)


def shortest_paths(w, cost_mode: str = "reciprocal") -> PathStats:
    """
    Mean, population sd and maximum (diameter) of shortest-path costs over
    ordered reachable pairs i != j. Edge cost is 1/weight (``reciprocal``)
    or the weight itself (``direct``). Unreachable pairs are excluded and
    counted.
    """
    d = distance_matrix(w, cost_mode)
    n = len(d)
    off = ~np.eye(n, dtype=bool)
    vals = d[off]
    ok = np.isfinite(vals)
    r = vals[ok]
    unreachable = int((~ok).sum())
    if len(r) == 0:
        raise NoEdges("no reachable pairs")
    mean = math.fsum(r.tolist()) / len(r)
    sd = math.sqrt(math.fsum(((r - mean) ** 2).tolist()) / len(r))
    return PathStats(mean, sd, float(r.max()), unreachable, len(r))


def transitivity(w) -> float:
    """
    Weighted global clustering on the symmetrized matrix max(w_ij, w_ji).

    A triplet centred on v with neighbours u and x has value
    (s_vu + s_vx) / 2; the result is the value of closed triplets over the
    value of all triplets.
    """
    m = _matrix(w)
    n = len(m)
    if n < 3:
        raise TooFewNodes("transitivity needs at least 3 nodes")
    s = np.maximum(m, m.T)
    b = (s > 0).astype(float)
    k = b.sum(axis=1)
    strength = s.sum(axis=1)
    # sum over unordered neighbour pairs {u, x} of v of (s_vu + s_vx)/2 = (k_v - 1) strength_v / 2
    total = math.fsum(((k - 1).clip(min=0) * strength / 2.0).tolist())
    if total <= 0:
        raise NoTriplets("network has no connected triplets")
    common = b @ b
    closed = math.fsum((0.5 * s * common).ravel().tolist())
    return closed / total


def _null_matrix(n: int, weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Same edge count, positions uniform over ordered pairs, permuted weights."""
    off = np.flatnonzero(~np.eye(n, dtype=bool).ravel())
    pos = rng.choice(off, size=len(weights), replace=False)
    out = np.zeros(n * n)
    out[pos] = rng.permutation(weights)
    return out.reshape(n, n)


def _clustering_or_zero(m) -> float:
    try:
        return transitivity(m)
    except NoTriplets:
        return 0.0


def small_worldness(w, cost_mode: str = "reciprocal", n_null: int = 20, seed: int = 0,
                    null_graphs: Iterable[np.ndarray] | None = None) -> float:
    """
    (C / C_null) / (L / L_null) with C the transitivity and L the mean
    shortest-path cost, against random graphs with the same node and edge
    counts and permuted weights. Null graphs without triplets count as
    clustering 0.

    ``null_graphs`` replaces the random draws (used to check the ratio).

    Raises
    ------
    DegenerateNull
        If the graph is complete (the null equals the observation up to
        weights) or the null clustering or path length is zero.
    """
    m = _matrix(w)
    n = len(m)
    if n < 3:
        raise TooFewNodes("small-worldness needs at least 3 nodes")
    if n_null < 1:
        raise ValidationError("n_null must be >= 1")
    C = transitivity(m)
    L = shortest_paths(m, cost_mode).mean
    if null_graphs is None:
        mask = m > 0
        wts = m[mask]
        if mask.sum() == n * (n - 1):
            raise DegenerateNull("complete graph: random null has the same topology")
        seqs = np.random.SeedSequence(seed).spawn(n_null)
        nulls = [_null_matrix(n, wts, np.random.default_rng(s)) for s in seqs]
    else:
        nulls = [_matrix(g) for g in null_graphs]
    cs, ls = [], []
    for g in nulls:
        cs.append(_clustering_or_zero(g))
        ls.append(shortest_paths(g, cost_mode).mean)
    c_null = math.fsum(cs) / len(cs)
    l_null = math.fsum(ls) / len(ls)
    if c_null <= 0 or l_null <= 0 or L <= 0:
        raise DegenerateNull("null model has zero clustering or zero path length")
    return (C / c_null) / (L / l_null)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    k_min: float
    n_tail: int
    ks: float


def fit_power_law(samples, min_tail: int = 2) -> PowerLawFit:
    """
    Continuous power-law fit: alpha = 1 + n / sum(ln(x / k_min)) over the
    tail x >= k_min, with k_min chosen among observed values to minimise the
    Kolmogorov-Smirnov distance (smallest k_min on ties).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    x = x[x > 0]
    if len(x) < 2:
        raise InsufficientDegrees("need at least 2 positive values")
    n = len(x)
    logx = np.log(x)
    # suffix sums of log x for O(1) alpha per candidate
    suffix = np.concatenate([np.cumsum(logx[::-1])[::-1], [0.0]])
    cands = np.unique(x)
    best = None
    for kmin in cands:
        start = int(np.searchsorted(x, kmin, side="left"))
        nt = n - start
        if nt < min_tail:
            break
        spread = suffix[start] - nt * math.log(kmin)
        if spread <= 1e-12 * nt:
            continue
        alpha = 1.0 + nt / spread
        tail = x[start:]
        model = 1.0 - (tail / kmin) ** (1.0 - alpha)
        upper = np.arange(1, nt + 1) / nt
        lower = np.arange(0, nt) / nt
        ks = float(max(np.max(np.abs(upper - model)), np.max(np.abs(lower - model))))
        if best is None or ks < best.ks:
            best = PowerLawFit(float(alpha), float(kmin), int(nt), ks)
    if best is None:
        raise InsufficientDegrees("no spread in the values above any k_min")
    return best


def strengths(w, mode: str = "total") -> np.ndarray:
    m = _matrix(w)
    if mode == "in":
        return m.sum(axis=0)
    if mode == "out":
        return m.sum(axis=1)
    if mode == "total":
        return m.sum(axis=0) + m.sum(axis=1)
    raise ValidationError("mode must be 'in', 'out' or 'total'")


def scale_free_alpha(w, mode: str = "total", min_nodes: int = 10) -> PowerLawFit:
    """Power-law exponent of node strengths; needs ``min_nodes`` nodes with positive strength."""
    k = strengths(w, mode)
    k = k[k > 0]
    if len(k) < min_nodes:
        raise InsufficientDegrees(f"{len(k)} nodes with positive strength, need {min_nodes}")
    if np.all(k == k[0]):
        raise InsufficientDegrees("all strengths are equal")
    return fit_power_law(k)


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - math.fsum(a.tolist()) / len(a)
    db = b - math.fsum(b.tolist()) / len(b)
    saa = math.fsum((da * da).tolist())
    sbb = math.fsum((db * db).tolist())
    if saa <= 0 or sbb <= 0:
        raise ZeroVariance("zero variance")
    r = math.fsum((da * db).tolist()) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def degree_correlation(w) -> float:
    """
    Pearson correlation between node in-strength and out-strength.

    Identical in- and out-strength vectors give 1 even when constant
    (a reciprocal network is perfectly correlated by convention); a
    network without edges raises ZeroVariance.
    """
    m = _matrix(w)
    if len(m) < 3:
        raise TooFewNodes("degree correlation needs at least 3 nodes")
    s_in, s_out = m.sum(axis=0), m.sum(axis=1)
    if not (m > 0).any():
        raise ZeroVariance("network has no edges")
    if np.array_equal(s_in, s_out):
        return 1.0
    try:
        return pearson(s_in, s_out)
    except ZeroVariance:
        raise ZeroVariance("in- or out-strength has zero variance") from None


@dataclass
class IndexVector:
    """Network indices of one window; None marks an index that is undefined."""

    window_id: str
    diam: float | None = None
    dens: float | None = None
    trans: float | None = None
    sp_mean: float | None = None
    sp_sd: float | None = None
    sw: float | None = None
    sf_alpha: float | None = None
    dc: float | None = None
    cost_mode: str = "reciprocal"
    null_seed: int = 0
    n_null: int = 20
    unreachable_pairs: int | None = None
    errors: dict = field(default_factory=dict)

    def values(self) -> list[float | None]:
        return [getattr(self, f) for f in INDEX_FIELDS]


def index_vector(w, cost_mode: str = "reciprocal", n_null: int = 20, seed: int = 0,
                 sf_mode: str = "total", window_id: str | None = None) -> IndexVector:
    """
    All indices of one window. A failing index is left as None and its
    error recorded in ``errors``.
    """
    wid = window_id if window_id is not None else getattr(w, "window_id", "")
    iv = IndexVector(wid, cost_mode=cost_mode, null_seed=seed, n_null=n_null)
    m = _matrix(w)

    def attempt(name, fn):
        try:
            return fn()
        except AeronetError as exc:
            iv.errors[name] = f"{type(exc).__name__}: {exc}"
            return None

    iv.dens = attempt("dens", lambda: density(m))
    sp = attempt("sp", lambda: shortest_paths(m, cost_mode))
    if sp is not None:
        iv.diam, iv.sp_mean, iv.sp_sd, iv.unreachable_pairs = sp.diameter, sp.mean, sp.sd, sp.unreachable
    iv.trans = attempt("trans", lambda: transitivity(m))
    iv.sw = attempt("sw", lambda: small_worldness(m, cost_mode, n_null, seed))
    fit = attempt("sf_alpha", lambda: scale_free_alpha(m, sf_mode))
    iv.sf_alpha = fit.alpha if fit is not None else None
    iv.dc = attempt("dc", lambda: degree_correlation(m))
    return iv


INDICES_MAGIC = "# aeronet-indices v1"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_indices(vectors: Sequence[IndexVector], path, header: dict | None = None) -> None:
    """Indices CSV: ``window_id``, the 8 indices, then provenance columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        extra = "".join(f"; {k}={v}" for k, v in (header or {}).items())
        fh.write(INDICES_MAGIC + extra + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(("window_id",) + INDEX_FIELDS + PROVENANCE_FIELDS)
        for v in vectors:
            wr.writerow([v.window_id] + [_fmt(getattr(v, f)) for f in INDEX_FIELDS + PROVENANCE_FIELDS])


def read_indices(path) -> list[IndexVector]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows or tuple(rows[0][: 1 + len(INDEX_FIELDS)]) != ("window_id",) + INDEX_FIELDS:
        raise ValidationError(f"{path}: not an indices CSV")
    cols = rows[0]
    for r in rows[1:]:
        if not r:
            continue
        d = dict(zip(cols, r))
        iv = IndexVector(d["window_id"])
        for f in INDEX_FIELDS:
            iv.__setattr__(f, float(d[f]) if d.get(f) else None)
        iv.cost_mode = d.get("cost_mode") or "reciprocal"
        iv.null_seed = int(d["null_seed"]) if d.get("null_seed") else 0
        iv.n_null = int(d["n_null"]) if d.get("n_null") else 0
        iv.unreachable_pairs = int(d["unreachable_pairs"]) if d.get("unreachable_pairs") else None
        out.append(iv)
    return out


# ---------------------------------------------------------------------------
# complete-linkage clustering


@dataclass(frozen=True)
class Dendrogram:
    """
    Merge history. Leaves are 0..n-1; merge k creates cluster n + k from
    ``merges[k] = (a, b, height, size)``.
    """

    labels: tuple[str, ...]
    merges: tuple[tuple[int, int, float, int], ...]
    dims: tuple[str, ...] = ()

    @property
    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges])

    def linkage_matrix(self) -> np.ndarray:
        return np.array([[a, b, h, s] for a, b, h, s in self.merges], dtype=float).reshape(-1, 4)

    def members(self, node: int) -> list[int]:
        n = len(self.labels)
        if node < n:
            return [node]
        a, b, _, _ = self.merges[node - n]
        return self.members(a) + self.members(b)

    def _height(self, node: int) -> float:
        n = len(self.labels)
        return 0.0 if node < n else self.merges[node - n][2]

    def to_newick(self) -> str:
        """Newick tree; branch lengths are differences of merge heights."""
        n = len(self.labels)

        def quote(s):
            if any(c in s for c in " ()[]':;,"):
                return "'" + s.replace("'", "''") + "'"
            return s

        def rec(node, parent_h):
            bl = repr(float(parent_h - self._height(node)))
            if node < n:
                return f"{quote(self.labels[node])}:{bl}"
            a, b, h, _ = self.merges[node - n]
            return f"({rec(a, h)},{rec(b, h)}):{bl}"

        if n == 1:
            return quote(self.labels[0]) + ";"
        a, b, h, _ = self.merges[-1]
        return f"({rec(a, h)},{rec(b, h)});"

    def cut(self, k: int) -> dict[str, int]:
        """Flat clusters after undoing the last k-1 merges; cluster ids by first leaf order."""
        n = len(self.labels)
        if not 1 <= k <= n:
            raise ValidationError(f"k must be in [1, {n}]")
        roots = {2 * n - 2} if n > 1 else {0}
        for step in range(len(self.merges) - 1, len(self.merges) - k, -1):
            node = n + step
            a, b, _, _ = self.merges[step]
            roots.discard(node)
            roots |= {a, b}
        groups = sorted((sorted(self.members(r)) for r in roots), key=lambda g: g[0])
        out = {}
        for cid, g in enumerate(groups, start=1):
            for leaf in g:
                out[self.labels[leaf]] = cid
        return out


def _feature_matrix(vectors, on_absent: str):
    if vectors and isinstance(vectors[0], IndexVector):
        labels = [v.window_id for v in vectors]
        raw = [v.values() for v in vectors]
        dims = list(INDEX_FIELDS)
    else:
        raw = [list(v) for v in vectors]
        labels = [str(k) for k in range(len(raw))]
        dims = [f"x{k}" for k in range(len(raw[0]) if raw else 0)]
    arr = np.array([[np.nan if x is None else float(x) for x in r] for r in raw], dtype=float)
    if arr.ndim != 2:
        raise ValidationError("vectors must share a dimension")
    bad = ~np.all(np.isfinite(arr), axis=0)
    if bad.any():
        if on_absent == "error":
            raise IncompleteVectors(f"absent values in {[d for d, b in zip(dims, bad) if b]}")
        warnings.warn(f"dropping dimensions with absent values: {[d for d, b in zip(dims, bad) if b]}",
                      stacklevel=3)
        arr = arr[:, ~bad]
        dims = [d for d, b in zip(dims, bad) if not b]
        if arr.shape[1] == 0:
            raise IncompleteVectors("every dimension has absent values")
    return labels, arr, dims


def standardize_columns(x: np.ndarray) -> np.ndarray:
    """z-scores per column (sample sd); constant columns are only centred."""
    mu = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1) if len(x) > 1 else np.zeros(x.shape[1])
    sd = np.where(sd > 0, sd, 1.0)
    return (x - mu) / sd


def hclust_complete(vectors, standardize: bool = True, labels: Sequence[str] | None = None,
                    on_absent: str = "drop") -> Dendrogram:
    """
    Complete-linkage agglomerative clustering with Euclidean distance.

    Parameters
    ----------
    vectors : sequence of IndexVector or array-like (n, d)
    standardize : bool
        z-score each dimension (sample sd) before computing distances.
    on_absent : {"drop", "error"}
        Dimensions with absent values are dropped for all vectors with a
        warning, or raise IncompleteVectors.

    Ties between equal merge distances go to the pair whose sorted leaf
    label tuples compare lowest.
    """
    vectors = list(vectors)
    if len(vectors) < 2:
        raise IncompleteVectors("need at least 2 vectors")
    lab, x, dims = _feature_matrix(vectors, on_absent)
    if labels is not None:
        lab = [str(s) for s in labels]
        if len(lab) != len(x):
            raise ValidationError("labels must match vectors")
    if standardize:
        x = standardize_columns(x)
    n = len(x)
    diff = x[:, None, :] - x[None, :, :]
    D = np.sqrt((diff**2).sum(axis=-1))
    active = {k: (k, (lab[k],)) for k in range(n)}  # slot -> (node id, sorted labels)
    merges = []
    dist = D.copy()
    for step in range(n - 1):
        slots = sorted(active)
        best = None
        for a_i, a in enumerate(slots):
            for b in slots[a_i + 1:]:
                la, lb = active[a][1], active[b][1]
                key = (dist[a, b],) + tuple(sorted((la, lb)))
                if best is None or key < best[0]:
                    best = (key, a, b)
        (h, *_), a, b = best
        na, la = active[a]
        nb, lb = active[b]
        if la > lb:
            na, la, nb, lb = nb, lb, na, la
        merges.append((na, nb, float(h), len(la) + len(lb)))
        new_d = np.maximum(dist[a], dist[b])
        dist[a, :] = new_d
        dist[:, a] = new_d
        dist[a, a] = 0.0
        active[a] = (n + step, tuple(sorted(la + lb)))
        del active[b]
    return Dendrogram(tuple(lab), tuple(merges), tuple(dims))


def write_merge_report(d: Dendrogram, path, k: int | None = None, header: str | None = None) -> None:
    """CSV of merges (``step,left,right,height,size``) and, with ``k``, flat cluster labels."""
    n = len(d.labels)

    def name(node):
        return d.labels[node] if node < n else f"#{node - n + 1}"

    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["step", "left", "right", "height", "size"])
        for s, (a, b, h, sz) in enumerate(d.merges, start=1):
            wr.writerow([s, name(a), name(b), repr(h), sz])
        if k is not None:
            fh.write("\n")
            wr.writerow(["window_id", "cluster"])
            for lbl, c in d.cut(k).items():
                wr.writerow([lbl, c])


# ---------------------------------------------------------------------------
# edge categories


@dataclass(frozen=True)
class EdgeCategories:
    """
    Quantile class of each positive edge, 1 (weakest) .. n_bins (strongest).
    Keys are ``(window_id, src, dst)``.
    """

    categories: dict
    bin_edges: tuple[float, ...]
    n_bins: int
    degenerate: bool = False


def _windows(obj) -> list:
    if hasattr(obj, "windows"):
        return list(obj.windows)
    if hasattr(obj, "weights"):
        return [obj]
    return list(obj)


def edge_quantile_categories(net, n_bins: int = 5) -> EdgeCategories:
    """
    Cut positive edge weights at the empirical k/n_bins quantiles; a weight
    equal to a cut point goes to the lower bin. All-equal weights give a
    single degenerate bin with a warning.
    """
    keys, vals = [], []
    for w in _windows(net):
        for src, dst, x in w.edges():
            if x > 0:
                keys.append((w.window_id, src, dst))
                vals.append(x)
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    if len(vals) < n_bins:
        raise TooFewEdges(f"{len(vals)} positive edges, need at least {n_bins}")
    v = np.array(vals)
    if np.all(v == v[0]):
        warnings.warn("all edge weights are equal; using a single category", stacklevel=2)
        return EdgeCategories({k: 1 for k in keys}, (), 1, True)
    cuts = np.quantile(v, np.arange(1, n_bins) / n_bins)
    cats = np.searchsorted(cuts, v, side="left") + 1
    return EdgeCategories({k: int(c) for k, c in zip(keys, cats)}, tuple(float(c) for c in cuts), n_bins)


def _centroids(partition: Partition) -> dict[str, tuple[float, float]]:
    return {r.id: (r.centroid.lon, r.centroid.lat) for r in partition}


def _category_edges(categories: EdgeCategories, partition: Partition):
    cen = _centroids(partition)
    by_cat: dict[int, list] = {c: [] for c in range(1, categories.n_bins + 1)}
    for key in sorted(categories.categories):
        _, src, dst = key
        by_cat[categories.categories[key]].append((cen[src], cen[dst]))
    return by_cat


def distance_by_category(categories: EdgeCategories, partition: Partition) -> dict[int, np.ndarray]:
    """Haversine distance (km) between source and destination centroids, grouped by category."""
    out = {}
    for c, pairs in _category_edges(categories, partition).items():
        if not pairs:
            out[c] = np.zeros(0)
            continue
        a = np.array([p[0] for p in pairs])
        b = np.array([p[1] for p in pairs])
        out[c] = haversine_km_arr(a[:, 0], a[:, 1], b[:, 0], b[:, 1])
    return out


def five_number_summary(x) -> tuple[float, float, float, float, float] | None:
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return None
    q = np.quantile(x, [0.0, 0.25, 0.5, 0.75, 1.0])
    return tuple(float(v) for v in q)


def bearing_histogram(categories: EdgeCategories, partition: Partition, n_sectors: int = 16) -> dict[int, np.ndarray]:
    """
    Counts of initial bearings (source centroid to destination centroid) in
    ``n_sectors`` equal sectors, sector k covering [k w, (k + 1) w) degrees
    clockwise from north.
    """
    width = 360.0 / n_sectors
    out = {}
    for c, pairs in _category_edges(categories, partition).items():
        counts = np.zeros(n_sectors, dtype=np.int64)
        if pairs:
            a = np.array([p[0] for p in pairs])
            b = np.array([p[1] for p in pairs])
            brg = initial_bearing_deg_arr(a[:, 0], a[:, 1], b[:, 0], b[:, 1])
            idx = np.floor(brg / width).astype(int) % n_sectors
            counts += np.bincount(idx, minlength=n_sectors)
        out[c] = counts
    return out


def edge_bearings(w, partition: Partition) -> list[tuple[str, str, float, float]]:
    """(src, dst, weight, bearing) for every positive edge of one window."""
    cen = _centroids(partition)
    out = []
    for src, dst, x in w.edges():
        if x > 0:
            a, b = cen[src], cen[dst]
            brg = float(initial_bearing_deg_arr(np.array([a[0]]), np.array([a[1]]), np.array([b[0]]), np.array([b[1]]))[0])
            out.append((src, dst, x, brg))
    return out


def write_distance_csv(samples: dict[int, np.ndarray], path, header: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["category", "distance_km"])
        for c in sorted(samples):
            for d in samples[c]:
                wr.writerow([c, repr(float(d))])


def write_summary_csv(samples: dict[int, np.ndarray], path, header: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["category", "n", "min", "q1", "median", "q3", "max"])
        for c in sorted(samples):
            s = five_number_summary(samples[c])
            wr.writerow([c, len(samples[c])] + (["", "", "", "", ""] if s is None else [repr(v) for v in s]))


def write_bearing_csv(hist: dict[int, np.ndarray], path, header: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["category", "sector_start_deg", "count"])
        for c in sorted(hist):
            n = len(hist[c])
            for k, cnt in enumerate(hist[c]):
                wr.writerow([c, repr(k * 360.0 / n), int(cnt)])


def write_categories_csv(cats: EdgeCategories, path, header: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        fh.write("# bin_edges=" + ",".join(repr(c) for c in cats.bin_edges) + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["window_id", "src", "dst", "category"])
        for key in sorted(cats.categories):
            wr.writerow(list(key) + [cats.categories[key]])
