"""
Planar-on-sphere geometric kernel.

Topology (inclusion, intersection) is computed in raw lon-lat degrees;
metric quantities (lengths, distances, bearings, areas) on a sphere of
radius ``EARTH_RADIUS_KM``. Regions crossing the antimeridian are rejected.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CoincidentPoints,
    DegenerateSegment,
    InvalidGeometry,
    OverlappingRegions,
    SamplingStalled,
)

log = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0088
# distance (deg) under which a point counts as lying on a ring edge
BOUNDARY_EPS = 1e-10
OVERLAP_TOL_DEG2 = 1e-9

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float
    alt: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise InvalidGeometry(f"longitude out of range: {self.lon}")
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise InvalidGeometry(f"latitude out of range: {self.lat}")
        if self.alt is not None and not math.isfinite(self.alt):
            raise InvalidGeometry(f"altitude not finite: {self.alt}")


@dataclass(frozen=True)
class SubSegment:
    """Maximal time interval during which a path stays inside a region."""

    t_enter: float
    t_exit: float
    length_km: float

    @property
    def duration(self) -> float:
        return self.t_exit - self.t_enter


def _as_ring(coords) -> np.ndarray:
    ring = np.asarray(coords, dtype=float)
    if ring.ndim != 2 or ring.shape[1] < 2:
        raise InvalidGeometry("ring must be a sequence of (lon, lat) pairs")
    ring = ring[:, :2]
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if not np.all(np.isfinite(ring)):
        raise InvalidGeometry("ring has non-finite coordinates")
    if len(np.unique(ring, axis=0)) < 3:
        raise InvalidGeometry("ring needs at least 3 distinct vertices")
    if np.any(np.abs(ring[:, 0]) > 180.0) or np.any(np.abs(ring[:, 1]) > 90.0):
        raise InvalidGeometry("ring coordinates out of lon/lat range")
    closed = np.vstack([ring, ring[:1]])
    if np.any(np.abs(np.diff(closed[:, 0])) > 180.0):
        raise InvalidGeometry("ring crosses the antimeridian")
    return ring


def _signed_area_deg2(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _ring_area_km2(ring: np.ndarray) -> float:
    lam = np.radians(ring[:, 0])
    phi = np.radians(ring[:, 1])
    lam2, phi2 = np.roll(lam, -1), np.roll(phi, -1)
    s = np.sum((lam2 - lam) * (2.0 + np.sin(phi) + np.sin(phi2)))
    return abs(float(s)) * EARTH_RADIUS_KM**2 / 2.0


def _ring_is_simple(ring: np.ndarray) -> bool:
    from shapely.geometry import LinearRing

    return bool(LinearRing(ring).is_simple)


class Region:
    """
    Polygonal network node: one exterior ring and optional holes.

    Parameters
    ----------
    id : str
        Region identifier.
    exterior : array-like, shape (n, 2)
        Exterior ring as (lon, lat) pairs; closing vertex optional.
    holes : sequence of array-like, optional
        Interior rings.
    """

    __slots__ = ("id", "exterior", "holes", "bbox", "_edges", "_centroid", "_area_km2")

    def __init__(self, id: str, exterior, holes: Sequence = ()):
        if not isinstance(id, str) or not id:
            raise InvalidGeometry("region id must be a non-empty string")
        self.id = id
        self.exterior = _as_ring(exterior)
        self.holes = tuple(_as_ring(h) for h in holes)
        for ring in (self.exterior, *self.holes):
            ring.setflags(write=False)
            if not _ring_is_simple(ring):
                raise InvalidGeometry(f"region {id!r} has a self-intersecting ring")
        if abs(_signed_area_deg2(self.exterior)) == 0.0:
            raise InvalidGeometry(f"region {id!r} has zero area")
        lo = self.exterior.min(axis=0)
        hi = self.exterior.max(axis=0)
        self.bbox = (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
        starts, ends = [], []
        for ring in (self.exterior, *self.holes):
            starts.append(ring)
            ends.append(np.roll(ring, -1, axis=0))
        self._edges = (np.vstack(starts), np.vstack(ends))
        self._centroid = None
        self._area_km2 = None

    def __repr__(self):
        return f"Region({self.id!r}, {len(self.exterior)} vertices, {len(self.holes)} holes)"

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end vertices of every ring edge, shape (E, 2) each."""
        return self._edges

    @property
    def centroid(self) -> GeoPoint:
        if self._centroid is None:
            tot_a = 0.0
            cx = cy = 0.0
            for k, ring in enumerate((self.exterior, *self.holes)):
                x, y = ring[:, 0], ring[:, 1]
                x2, y2 = np.roll(x, -1), np.roll(y, -1)
                cr = x * y2 - x2 * y
                a = 0.5 * cr.sum()
                sx = ((x + x2) * cr).sum() / 6.0
                sy = ((y + y2) * cr).sum() / 6.0
                sign = 1.0 if k == 0 else -1.0
                # orient each ring consistently before combining
                if a < 0:
                    a, sx, sy = -a, -sx, -sy
                tot_a += sign * a
                cx += sign * sx
                cy += sign * sy
            self._centroid = GeoPoint(float(cx / tot_a), float(cy / tot_a))
        return self._centroid

    @property
    def area_km2(self) -> float:
        """Spherical area of the region in km^2 (holes subtracted)."""
        if self._area_km2 is None:
            a = _ring_area_km2(self.exterior)
            a -= sum(_ring_area_km2(h) for h in self.holes)
            self._area_km2 = a
        return self._area_km2

    def to_shapely(self):
        from shapely.geometry import Polygon

        return Polygon(self.exterior, [h for h in self.holes])

    def to_geojson_feature(self) -> dict:
        rings = []
        for ring in (self.exterior, *self.holes):
            closed = np.vstack([ring, ring[:1]])
            rings.append([[float(x), float(y)] for x, y in closed])
        return {
            "type": "Feature",
            "properties": {"id": self.id},
            "geometry": {"type": "Polygon", "coordinates": rings},
        }


def _bbox_overlap(a, b, pad: float = 0.0) -> bool:
    return not (a[2] + pad < b[0] or b[2] + pad < a[0] or a[3] + pad < b[1] or b[3] + pad < a[1])


class Partition:
    """
    Ordered collection of pairwise-disjoint regions with a bounding-box index.

    Disjointness is validated at construction: any pair whose interiors
    overlap by more than ``OVERLAP_TOL_DEG2`` raises OverlappingRegions.
    """

    def __init__(self, regions: Iterable[Region], validate: bool = True):
        self.regions = tuple(regions)
        ids = [r.id for r in self.regions]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise InvalidGeometry(f"duplicated region ids: {dup}")
        self._by_id = {r.id: k for k, r in enumerate(self.regions)}
        self._bboxes = np.array([r.bbox for r in self.regions], dtype=float).reshape(-1, 4)
        if validate:
            self._check_disjoint()

    def __len__(self):
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)

    def __getitem__(self, key: int | str) -> Region:
        if isinstance(key, str):
            return self.regions[self._by_id[key]]
        return self.regions[key]

    def __contains__(self, region_id: str) -> bool:
        return region_id in self._by_id

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.regions)

    def index_of(self, region_id: str) -> int:
        return self._by_id[region_id]

    def _check_disjoint(self) -> None:
        from shapely.strtree import STRtree

        if len(self.regions) < 2:
            return
        polys = [r.to_shapely() for r in self.regions]
        tree = STRtree(polys)
        left, right = tree.query(polys, predicate="intersects")
        for i, j in zip(left.tolist(), right.tolist()):
            if i >= j:
                continue
            area = polys[i].intersection(polys[j]).area
            if area > OVERLAP_TOL_DEG2:
                raise OverlappingRegions(
                    f"regions {self.regions[i].id!r} and {self.regions[j].id!r} "
                    f"overlap by {area:.3g} deg^2"
                )

    def candidates(self, bbox) -> np.ndarray:
        """Indices of regions whose bounding box intersects ``bbox``."""
        b = self._bboxes
        ok = ~(
            (b[:, 2] < bbox[0])
            | (bbox[2] < b[:, 0])
            | (b[:, 3] < bbox[1])
            | (bbox[3] < b[:, 1])
        )
        return np.flatnonzero(ok)

    def locate(self, lon: float, lat: float) -> list[str]:
        """Ids of all regions containing the point (boundary included)."""
        hits = []
        for k in self.candidates((lon, lat, lon, lat)):
            r = self.regions[k]
            if points_in_region(np.array([lon]), np.array([lat]), r)[0]:
                hits.append(r.id)
        return hits

    # -- GeoJSON ----------------------------------------------------------
    def to_geojson(self) -> dict:
        return {
            "type": "FeatureCollection",
            "features": [r.to_geojson_feature() for r in self.regions],
        }

    def write_geojson(self, path, header: Mapping | None = None) -> None:
        doc = self.to_geojson()
        if header:
            doc["aeronet"] = dict(header)
        Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_geojson(cls, doc: Mapping, validate: bool = True) -> "Partition":
        if doc.get("type") != "FeatureCollection":
            raise InvalidGeometry("partition must be a GeoJSON FeatureCollection")
        regions = []
        seen = set()
        for k, feat in enumerate(doc.get("features", [])):
            props = feat.get("properties") or {}
            rid = props.get("id")
            if not isinstance(rid, str) or not rid:
                raise InvalidGeometry(f"feature {k} lacks a string 'id' property")
            if rid in seen:
                raise InvalidGeometry(f"duplicated region id {rid!r}")
            seen.add(rid)
            geom = feat.get("geometry") or {}
            if geom.get("type") != "Polygon":
                raise InvalidGeometry(f"feature {rid!r} is not a Polygon")
            rings = geom["coordinates"]
            regions.append(Region(rid, rings[0], rings[1:]))
        return cls(regions, validate=validate)

    @classmethod
    def read_geojson(cls, path, validate: bool = True) -> "Partition":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_geojson(doc, validate=validate)


# ---------------------------------------------------------------------------
# point-in-region


def points_in_region(lon, lat, region: Region, eps: float = BOUNDARY_EPS) -> np.ndarray:
    """
    Vectorised closed point-in-region test.

    Even-odd rule over all rings (holes excluded); points within ``eps``
    degrees of any ring edge count as inside.
    """
    px = np.atleast_1d(np.asarray(lon, dtype=float))
    py = np.atleast_1d(np.asarray(lat, dtype=float))
    a, b = region.edges
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    dx, dy = bx - ax, by - ay
    seglen = np.hypot(dx, dy)
    out = np.empty(px.shape, dtype=bool)
    chunk = max(1, 2_000_000 // max(len(ax), 1))
    for s in range(0, len(px), chunk):
        x = px[s : s + chunk, None]
        y = py[s : s + chunk, None]
        straddle = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xint = ax + (y - ay) * dx / dy
        crossings = np.count_nonzero(straddle & (x < xint), axis=1)
        inside = (crossings % 2) == 1
        cross = dx * (y - ay) - dy * (x - ax)
        on_line = np.abs(cross) <= eps * seglen
        within = (
            (x >= np.minimum(ax, bx) - eps)
            & (x <= np.maximum(ax, bx) + eps)
            & (y >= np.minimum(ay, by) - eps)
            & (y <= np.maximum(ay, by) + eps)
        )
        on_boundary = np.any(on_line & within, axis=1)
        out[s : s + chunk] = inside | on_boundary
    return out


def point_in_region(p: GeoPoint, r: Region) -> bool:
    """True iff ``p`` lies in the closed region ``r``."""
    return bool(points_in_region(np.array([p.lon]), np.array([p.lat]), r)[0])


# ---------------------------------------------------------------------------
# metric helpers


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km."""
    return float(haversine_km_arr(a.lon, a.lat, b.lon, b.lat))


def haversine_km_arr(lon1, lat1, lon2, lat2):
    lam1, phi1, lam2, phi2 = map(np.radians, (lon1, lat1, lon2, lat2))
    h = np.sin((phi2 - phi1) / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin((lam2 - lam1) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def initial_bearing_deg(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle initial bearing from ``a`` to ``b``; 0 = north, clockwise."""
    if a.lon == b.lon and a.lat == b.lat:
        raise CoincidentPoints(f"bearing undefined for coincident points {a}")
    return float(initial_bearing_deg_arr(a.lon, a.lat, b.lon, b.lat))


def initial_bearing_deg_arr(lon1, lat1, lon2, lat2):
    lam1, phi1, lam2, phi2 = map(np.radians, (lon1, lat1, lon2, lat2))
    dlam = lam2 - lam1
    y = np.sin(dlam) * np.cos(phi2)
    x = np.cos(phi1) * np.sin(phi2) - np.sin(phi1) * np.cos(phi2) * np.cos(dlam)
    deg = np.degrees(np.arctan2(y, x)) % 360.0
    # -0.0 % 360 and rounding can produce 360.0
    return np.where(deg >= 360.0, 0.0, deg)


def destination_point(lon: float, lat: float, bearing_deg: float, dist_km: float) -> tuple[float, float]:
    """Point reached from (lon, lat) along a great circle."""
    phi1, lam1 = math.radians(lat), math.radians(lon)
    theta = math.radians(bearing_deg)
    delta = dist_km / EARTH_RADIUS_KM
    phi2 = math.asin(math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta))
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * math.sin(phi2),
    )
    lon2 = (math.degrees(lam2) + 540.0) % 360.0 - 180.0
    return lon2, math.degrees(phi2)


def lonlat_arc_km(lon0, lat0, lon1, lat1, u0=0.0, u1=1.0):
    """
    Length on the sphere of the piece [u0, u1] of the path interpolated
    linearly in (lon, lat) from (lon0, lat0) to (lon1, lat1).

    This is the limit of summing haversine distances over an ever finer
    resampling of the interpolated path; computed with 8-point
    Gauss-Legendre quadrature, so it is additive over sub-pieces.
    """
    lat0 = np.asarray(lat0, dtype=float)
    dphi = np.radians(np.asarray(lat1, dtype=float) - lat0)
    dlam = np.radians(np.asarray(lon1, dtype=float) - np.asarray(lon0, dtype=float))
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    half = (u1 - u0) / 2.0
    mid = (u1 + u0) / 2.0
    u = mid[..., None] + half[..., None] * _GL_NODES
    phi = np.radians(lat0)[..., None] + u * dphi[..., None]
    speed = np.sqrt(dphi[..., None] ** 2 + (np.cos(phi) * dlam[..., None]) ** 2)
    return EARTH_RADIUS_KM * half * (speed @ _GL_WEIGHTS)


def polyline_length_km(coords) -> float:
    """Total length of a lon-lat polyline, consistent with ``clip_polyline``."""
    xy = np.asarray(coords, dtype=float)
    if len(xy) < 2:
        return 0.0
    return math.fsum(lonlat_arc_km(xy[:-1, 0], xy[:-1, 1], xy[1:, 0], xy[1:, 1]).tolist())


# ---------------------------------------------------------------------------
# polyline clipping

# A run is a maximal inside stretch: list of (fix interval index, u0, u1).
Run = list


def _segment_breaks(p0, d, a, e, tol=1e-12):
    """Crossing parameters u in [0, 1] of segments p0 + u d with edges a + v e."""
    r = a[None, :, :] - p0[:, None, :]
    dd = d[:, None, :]
    ee = e[None, :, :]
    denom = dd[..., 0] * ee[..., 1] - dd[..., 1] * ee[..., 0]
    rxe = r[..., 0] * ee[..., 1] - r[..., 1] * ee[..., 0]
    rxd = r[..., 0] * dd[..., 1] - r[..., 1] * dd[..., 0]
    scale = np.hypot(dd[..., 0], dd[..., 1]) * np.hypot(ee[..., 0], ee[..., 1])
    proper = np.abs(denom) > 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = np.where(proper, rxe / denom, np.nan)
        v = np.where(proper, rxd / denom, np.nan)
    hit = proper & (u >= -tol) & (u <= 1 + tol) & (v >= -tol) & (v <= 1 + tol)
    # collinear overlaps: edge endpoints projected on the segment
    dlen2 = dd[..., 0] ** 2 + dd[..., 1] ** 2
    rlen = np.hypot(dd[..., 0], dd[..., 1])
    collinear = ~proper & (np.abs(rxd) <= BOUNDARY_EPS * rlen) & (dlen2 > 0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ua = (r[..., 0] * dd[..., 0] + r[..., 1] * dd[..., 1]) / dlen2
        ub = ((r[..., 0] + ee[..., 0]) * dd[..., 0] + (r[..., 1] + ee[..., 1]) * dd[..., 1]) / dlen2
    out = []
    for k in range(len(p0)):
        vals = [0.0, 1.0]
        vals.extend(u[k, hit[k]].tolist())
        if collinear[k].any():
            cands = np.concatenate([ua[k, collinear[k]], ub[k, collinear[k]]])
            vals.extend(cands[(cands >= -tol) & (cands <= 1 + tol)].tolist())
        out.append(np.unique(np.clip(vals, 0.0, 1.0)))
    return out


def clip_runs(coords, region: Region) -> list[Run]:
    """
    Inside runs of a lon-lat polyline with respect to a closed region.

    Returns a list of runs; each run is a list of ``(i, u0, u1)`` pieces
    where ``i`` indexes the fix interval and ``u`` the linear parameter in
    it. Zero-length runs record tangential contacts.
    """
    xy = np.asarray(coords, dtype=float)[:, :2]
    n = len(xy)
    if n == 0:
        return []
    bb = region.bbox
    pad = 1e-9
    if n == 1:
        if points_in_region(xy[:1, 0], xy[:1, 1], region)[0]:
            return [[(0, 0.0, 0.0)]]
        return []
    p0 = xy[:-1]
    d = xy[1:] - xy[:-1]
    lo = np.minimum(xy[:-1], xy[1:])
    hi = np.maximum(xy[:-1], xy[1:])
    cand = ~(
        (hi[:, 0] < bb[0] - pad)
        | (lo[:, 0] > bb[2] + pad)
        | (hi[:, 1] < bb[1] - pad)
        | (lo[:, 1] > bb[3] + pad)
    )
    idx = np.flatnonzero(cand)
    if len(idx) == 0:
        return []
    a, b = region.edges
    # restrict edges to those near the candidate segments' joint bbox
    jlo = lo[idx].min(axis=0) - pad
    jhi = hi[idx].max(axis=0) + pad
    elo = np.minimum(a, b)
    ehi = np.maximum(a, b)
    ekeep = ~((ehi[:, 0] < jlo[0]) | (elo[:, 0] > jhi[0]) | (ehi[:, 1] < jlo[1]) | (elo[:, 1] > jhi[1]))
    a, e = a[ekeep], (b - a)[ekeep]
    if len(a):
        breaks = _segment_breaks(p0[idx], d[idx], a, e)
    else:
        breaks = [np.array([0.0, 1.0]) for _ in idx]

    seg_of, us = [], []
    mids_seg, mids_u = [], []
    for k, bk in zip(idx.tolist(), breaks):
        seg_of.extend([k] * len(bk))
        us.extend(bk.tolist())
        m = (bk[:-1] + bk[1:]) / 2.0
        mids_seg.extend([k] * len(m))
        mids_u.extend(m.tolist())
    seg_of = np.asarray(seg_of)
    us = np.asarray(us)
    mids_seg = np.asarray(mids_seg, dtype=int)
    mids_u = np.asarray(mids_u)
    allseg = np.concatenate([seg_of, mids_seg])
    allu = np.concatenate([us, mids_u])
    pts = xy[allseg] + allu[:, None] * d[allseg]
    ins = points_in_region(pts[:, 0], pts[:, 1], region)
    ins_break = ins[: len(us)]
    ins_mid = ins[len(us) :]

    pieces = []
    pos_b = 0
    pos_m = 0
    for k, bk in zip(idx.tolist(), breaks):
        nb = len(bk)
        ib = ins_break[pos_b : pos_b + nb]
        im = ins_mid[pos_m : pos_m + nb - 1]
        for j in range(nb - 1):
            if im[j]:
                pieces.append((k, float(bk[j]), float(bk[j + 1])))
        for j in range(nb):
            if ib[j]:
                left = j > 0 and im[j - 1]
                right = j < nb - 1 and im[j]
                if not (left or right):
                    pieces.append((k, float(bk[j]), float(bk[j])))
        pos_b += nb
        pos_m += nb - 1

    pieces.sort(key=lambda p: (p[0] + p[1], p[0] + p[2]))
    runs: list[Run] = []
    end = -1.0
    for p in pieces:
        g0, g1 = p[0] + p[1], p[0] + p[2]
        if runs and g0 <= end:
            if g1 > end:
                runs[-1].append(p)
                end = g1
            elif p[1] != p[2]:
                runs[-1].append(p)
        else:
            runs.append([p])
            end = g1
    # drop degenerate pieces that ended up inside a positive run
    cleaned = []
    for run in runs:
        pos = [p for p in run if p[2] > p[1]]
        cleaned.append(pos if pos else run[:1])
    return cleaned


def piece_time(times, i: int, u: float) -> float:
    if u == 0.0 or i + 1 >= len(times):
        return float(times[i])
    if u == 1.0:
        return float(times[i + 1])
    return float(times[i] * (1.0 - u) + times[i + 1] * u)


def runs_to_subsegments(times, coords, runs: list[Run]) -> list[SubSegment]:
    xy = np.asarray(coords, dtype=float)
    out = []
    for run in runs:
        i0, u0, _ = run[0]
        i1, _, u1 = run[-1]
        lengths = []
        for i, a, b in run:
            if b > a:
                lengths.append(float(lonlat_arc_km(xy[i, 0], xy[i, 1], xy[i + 1, 0], xy[i + 1, 1], a, b)))
        out.append(SubSegment(piece_time(times, i0, u0), piece_time(times, i1, u1), math.fsum(lengths)))
    return out


def clip_polyline(times, coords, region: Region) -> list[SubSegment]:
    """
    Clip a time-stamped lon-lat polyline against a closed region.

    Parameters
    ----------
    times : array-like, shape (n,)
        Strictly increasing fix times in seconds.
    coords : array-like, shape (n, 2+) or sequence of GeoPoint
        Fix positions; consecutive fixes are joined linearly in lon-lat.
    region : Region

    Returns
    -------
    list of SubSegment
        Maximal, disjoint, time-ordered inside intervals. Crossing times
        come from exact segment/edge intersection mapped linearly to time.

    Raises
    ------
    DegenerateSegment
        If two consecutive fixes share a timestamp.
    """
    t = np.asarray(times, dtype=float)
    if len(coords) and isinstance(coords[0], GeoPoint):
        xy = np.array([[p.lon, p.lat] for p in coords], dtype=float)
    else:
        xy = np.asarray(coords, dtype=float)[:, :2]
    if len(t) != len(xy):
        raise ValueError("times and coords differ in length")
    if len(t) < 2:
        raise ValueError("clip_polyline needs at least two fixes")
    dt = np.diff(t)
    if np.any(dt == 0):
        k = int(np.flatnonzero(dt == 0)[0])
        raise DegenerateSegment(f"fixes {k} and {k + 1} share timestamp {t[k]}")
    if np.any(dt < 0):
        raise ValueError("fix times must be increasing")
    return runs_to_subsegments(t, xy, clip_runs(xy, region))


# ---------------------------------------------------------------------------
# sampling and partition builders


def sample_points(r: Region, n: int, seed: int) -> list[GeoPoint]:
    """
    Draw ``n`` points uniformly (in lon-lat) inside ``r`` by rejection
    sampling from its bounding box. Deterministic given ``seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x0, y0, x1, y1 = r.bbox
    bbox_area = (x1 - x0) * (y1 - y0)
    poly_area = abs(_signed_area_deg2(r.exterior)) - sum(abs(_signed_area_deg2(h)) for h in r.holes)
    if bbox_area <= 0 or poly_area / bbox_area < 1e-6:
        raise SamplingStalled(f"acceptance rate below 1e-6 for region {r.id!r}")
    rng = np.random.default_rng(seed)
    got: list[np.ndarray] = []
    have = 0
    tried = 0
    while have < n:
        m = max(256, int(2 * (n - have) * bbox_area / poly_area))
        xs = rng.uniform(x0, x1, m)
        ys = rng.uniform(y0, y1, m)
        ok = points_in_region(xs, ys, r)
        tried += m
        acc = np.column_stack([xs[ok], ys[ok]])
        got.append(acc)
        have += len(acc)
        if tried >= 2_000_000 and have / tried < 1e-6:
            raise SamplingStalled(f"acceptance rate below 1e-6 for region {r.id!r}")
    pts = np.vstack(got)[:n]
    return [GeoPoint(float(x), float(y)) for x, y in pts]


def allocate_counts(areas: Sequence[float], min_count: int, max_count: int) -> list[int]:
    """clamp(round(min + (max - min) * area / max_area), min, max), half-up rounding."""
    if min_count < 1 or max_count < min_count:
        raise ValueError("need 1 <= min <= max")
    areas = np.asarray(areas, dtype=float)
    top = areas.max() if len(areas) else 0.0
    out = []
    for a in areas:
        ratio = a / top if top > 0 else 0.0
        c = math.floor(min_count + (max_count - min_count) * ratio + 0.5)
        out.append(int(min(max(c, min_count), max_count)))
    return out


def allocate_samples(partition: Partition, min_count: int, max_count: int) -> dict[str, int]:
    """Arrival-point budget per region, linear in region area."""
    counts = allocate_counts([r.area_km2 for r in partition], min_count, max_count)
    return {r.id: c for r, c in zip(partition, counts)}


def grid_partition(lon0: float, lat0: float, lon1: float, lat1: float, cell_km: float,
                   mask: Partition | None = None) -> Partition:
    """
    Regular lon-lat grid of roughly ``cell_km`` square cells.

    The latitude step is exact along a meridian; the longitude step is
    taken at the mid-latitude of the box. With ``mask``, only cells whose
    centroid falls in a mask region are kept.
    """
    if cell_km <= 0 or lon1 <= lon0 or lat1 <= lat0:
        raise InvalidGeometry("grid needs lon0 < lon1, lat0 < lat1 and cell_km > 0")
    km_per_deg = EARTH_RADIUS_KM * math.pi / 180.0
    dlat = cell_km / km_per_deg
    dlon = cell_km / (km_per_deg * math.cos(math.radians((lat0 + lat1) / 2.0)))
    nrow = max(1, math.ceil((lat1 - lat0) / dlat - 1e-9))
    ncol = max(1, math.ceil((lon1 - lon0) / dlon - 1e-9))
    width = len(str(max(nrow, ncol) - 1))
    regions = []
    for i in range(nrow):
        for j in range(ncol):
            x0, y0 = lon0 + j * dlon, lat0 + i * dlat
            x1, y1 = x0 + dlon, y0 + dlat
            ring = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
            reg = Region(f"r{i:0{width}d}c{j:0{width}d}", ring)
            if mask is not None:
                c = reg.centroid
                if not mask.locate(c.lon, c.lat):
                    continue
            regions.append(reg)
    return Partition(regions)


def geodesic_circle(center_lon: float, center_lat: float, radius_km: float, n: int = 64) -> np.ndarray:
    """``n``-gon approximating a geodesic circle, vertices counter-clockwise."""
    bearings = np.arange(n) * 360.0 / n
    pts = [destination_point(center_lon, center_lat, -b, radius_km) for b in bearings]
    return np.array(pts)


def buffer_partition(centers: Sequence[tuple[str, float, float]], radius_km: float, n: int = 64) -> Partition:
    """Partition of ``n``-gon geodesic buffers; overlapping buffers are rejected."""
    regions = [Region(rid, geodesic_circle(lon, lat, radius_km, n)) for rid, lon, lat in centers]
    return Partition(regions)
