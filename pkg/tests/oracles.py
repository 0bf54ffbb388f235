"""
Independent reference implementations used as test oracles.

Nothing here calls the code under test. Inclusion tests use shapely or a
winding-number routine; graph references enumerate paths and triplets
directly.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon

R_KM = 6371.0088


def haversine(lon1, lat1, lon2, lat2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * R_KM * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


def winding_number_inside(x, y, ring) -> bool:
    """Non-zero winding rule for a simple ring (list of vertices, not closed)."""
    wn = 0
    n = len(ring)
    for k in range(n):
        x0, y0 = ring[k]
        x1, y1 = ring[(k + 1) % n]
        cross = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
        if y0 <= y:
            if y1 > y and cross > 0:
                wn += 1
        elif y1 <= y and cross < 0:
            wn -= 1
    return wn != 0


def random_convex_ring(rng, cx, cy, r, n=None):
    """Convex polygon: sorted random angles on a jittered circle, CCW."""
    n = n or int(rng.integers(3, 12))
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    while np.min(np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))) < 0.05:
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    rad = r * np.ones(n)
    pts = np.column_stack([cx + rad * np.cos(ang), cy + rad * np.sin(ang)])
    hull = Polygon(pts).convex_hull
    return list(hull.exterior.coords)[:-1]


def dense_clip_oracle(times, lon, lat, ring, n=100_000):
    """
    Duration and length inside a polygon by dense resampling in time.

    Samples the linear interpolant at ``n`` equally spaced times; each small
    interval counts as inside if its midpoint is (shapely, boundary
    included).
    """
    times = np.asarray(times, dtype=float)
    ts = np.linspace(times[0], times[-1], n + 1)
    xs = np.interp(ts, times, lon)
    ys = np.interp(ts, times, lat)
    tm = 0.5 * (ts[:-1] + ts[1:])
    xm = np.interp(tm, times, lon)
    ym = np.interp(tm, times, lat)
    poly = Polygon(ring)
    inside = shapely.intersects_xy(poly, xm, ym)
    dur = float(np.sum(np.diff(ts)[inside]))
    seg_len = haversine(xs[:-1], ys[:-1], xs[1:], ys[1:])
    length = float(np.sum(seg_len[inside]))
    return dur, length


def contact_oracle(lon, lat, ring) -> int:
    """1 if the polyline meets the closed polygon."""
    poly = Polygon(ring)
    if len(lon) == 1:
        return int(shapely.intersects_xy(poly, lon[0], lat[0]))
    return int(LineString(np.column_stack([lon, lat])).intersects(poly))


# ---------------------------------------------------------------------------
# graphs


def brute_shortest_paths(w, cost_mode="reciprocal"):
    """
    Minimum path cost for every ordered pair by enumerating all simple
    paths. Returns a dict (i, j) -> cost for reachable pairs.
    """
    n = len(w)
    out = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            best = math.inf
            others = [k for k in range(n) if k not in (i, j)]
            for r in range(len(others) + 1):
                for mid in itertools.permutations(others, r):
                    path = (i,) + mid + (j,)
                    cost = 0.0
                    ok = True
                    for a, b in zip(path[:-1], path[1:]):
                        if w[a][b] <= 0:
                            ok = False
                            break
                        cost += 1.0 / w[a][b] if cost_mode == "reciprocal" else w[a][b]
                    if ok and cost < best:
                        best = cost
            if best < math.inf:
                out[(i, j)] = best
    return out


def brute_transitivity(w):
    """Weighted global clustering by explicit triplet enumeration on max(w, w^T)."""
    n = len(w)
    s = [[max(w[i][j], w[j][i]) if i != j else 0.0 for j in range(n)] for i in range(n)]
    total = 0.0
    closed = 0.0
    for v in range(n):
        for a, b in itertools.combinations(range(n), 2):
            if v in (a, b):
                continue
            if s[v][a] > 0 and s[v][b] > 0:
                val = (s[v][a] + s[v][b]) / 2.0
                total += val
                if s[a][b] > 0:
                    closed += val
    return None if total == 0 else closed / total


def brute_complete_linkage(x):
    """
    Complete linkage recomputing every cluster distance from member pairs
    at each step (O(n^3) per step). Ties go to the pair with the smallest
    sorted member-index tuples. Returns [(members_a, members_b, height)].
    """
    x = np.asarray(x, dtype=float)
    n = len(x)

    def d(i, j):
        return math.sqrt(sum((x[i][k] - x[j][k]) ** 2 for k in range(x.shape[1])))

    clusters = [(i,) for i in range(n)]
    merges = []
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            h = max(d(i, j) for i in clusters[a] for j in clusters[b])
            key = (h, tuple(sorted((clusters[a], clusters[b]))))
            if best is None or key < best[0]:
                best = (key, a, b)
        (h, _), a, b = best
        ca, cb = clusters[a], clusters[b]
        merges.append((frozenset(ca), frozenset(cb), h))
        clusters = [c for k, c in enumerate(clusters) if k not in (a, b)] + [tuple(sorted(ca + cb))]
    return merges
