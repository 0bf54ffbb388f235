"""
Pointwise connectivity measures Psi(A | t, s, x) and the Monte Carlo
estimator of integrated connectivity.

Every measure works from the inside runs returned by
:func:`aeronet.geometry.clip_runs`: stretches of the linearly interpolated
path lying in the closed region, split exactly at boundary crossings.
Time integrals use the trapezoid rule on those pieces.
"""

from __future__ import annotations

import configparser
import csv
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingCovariate, MissingJacobian, NoSamples, ValidationError
from .geometry import (
    EARTH_RADIUS_KM,
    Region,
    clip_runs,
    lonlat_arc_km,
    piece_time,
    points_in_region,
)
from .trajectory import TrajectorySegment, parse_time

MEASURE_KINDS = (
    "contact",
    "contact_min_length",
    "duration",
    "length",
    "volume",
    "field",
    "covariate",
    "covariate_measure",
)

JACDET = "jacdet"
_ALT_BELOW = re.compile(r"^alt_below\(\s*([-+0-9.eE]+)\s*\)$")


@dataclass(frozen=True)
class PointwiseMeasure:
    """
    Choice of pointwise connectivity and its parameters.

    Parameters
    ----------
    kind : str
        One of :data:`MEASURE_KINDS`.
    min_length_km : float
        Threshold for ``contact_min_length`` (strict inequality).
    z_source : float or str
        Origin factor Z(s, x): a constant, or the name of a covariate read
        at the origin fix.
    ztilde_source : str or None
        Along-path factor: a fix covariate name, ``"alt_below(h)"``, or
        None for the constant 1.
    g_east, g_north : str
        Fix covariates holding the external vector field for ``field``.
    events : tuple of (time, weight)
        Event times (seconds) and non-negative weights for
        ``covariate_measure``.
    """

    kind: str = "contact"
    min_length_km: float = 0.0
    z_source: float | str = 1.0
    ztilde_source: str | None = None
    g_east: str | None = None
    g_north: str | None = None
    events: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValidationError(f"unknown measure {self.kind!r}; expected one of {MEASURE_KINDS}")
        if not (self.min_length_km >= 0 and math.isfinite(self.min_length_km)):
            raise ValidationError("min_length_km must be finite and >= 0")
        if self.kind == "field" and not (self.g_east and self.g_north):
            raise ValidationError("field measure needs g_east and g_north covariate names")
        for t, w in self.events:
            if not (math.isfinite(t) and math.isfinite(w)) or w < 0:
                raise ValidationError("event weights must be finite and non-negative")
        if self.ztilde_source is not None and self.ztilde_source.strip() in ("", "1"):
            object.__setattr__(self, "ztilde_source", None)

    def describe(self) -> str:
        """Short text form, used in file headers."""
        if self.kind == "contact_min_length":
            return f"contact_min_length(min_length_km={self.min_length_km!r})"
        if self.kind == "field":
            return f"field(g_east={self.g_east},g_north={self.g_north})"
        if self.kind in ("covariate", "covariate_measure"):
            parts = [f"z={self.z_source}", f"ztilde={self.ztilde_source or 1}"]
            if self.kind == "covariate_measure":
                parts.append(f"events={len(self.events)}")
            return f"{self.kind}({','.join(parts)})"
        return self.kind

    def __call__(self, seg: TrajectorySegment, region: Region) -> float:
        return psi(seg, region, self)


@dataclass(frozen=True)
class EstimatorConfig:
    """
    Scale factors of the estimator.

    ``b_area`` is ``"unit"`` (|B| = 1), ``"km2"`` (area of the receptor
    region) or a positive number used for every receptor.
    """

    T_length: float = 1.0
    b_area: str | float = "unit"

    def __post_init__(self):
        if not (self.T_length > 0 and math.isfinite(self.T_length)):
            raise ValidationError("T_length must be positive")
        if isinstance(self.b_area, str):
            if self.b_area not in ("unit", "km2"):
                raise ValidationError("b_area must be 'unit', 'km2' or a positive number")
        elif not (self.b_area > 0 and math.isfinite(self.b_area)):
            raise ValidationError("b_area must be positive")

    def area_of(self, region: Region) -> float:
        if self.b_area == "unit":
            return 1.0
        if self.b_area == "km2":
            return region.area_km2
        return float(self.b_area)

    @property
    def b_area_label(self) -> str:
        return self.b_area if isinstance(self.b_area, str) else repr(float(self.b_area))


# ---------------------------------------------------------------------------
# inside pieces


def _pieces(seg: TrajectorySegment, region: Region):
    """Inside runs of ``seg`` in ``region`` (empty if bounding boxes are apart)."""
    sb = seg.bbox
    rb = region.bbox
    pad = 1e-9
    if sb[2] < rb[0] - pad or sb[0] > rb[2] + pad or sb[3] < rb[1] - pad or sb[1] > rb[3] + pad:
        return []
    if len(seg) > 1:
        dt = np.diff(seg.times)
        if np.any(dt <= 0):
            from .errors import DegenerateSegment
            raise DegenerateSegment(f"trajectory {seg.traj_id!r} has repeated fix times")
    return clip_runs(seg.coords, region)


def _interp(values: np.ndarray, i: int, u: float) -> float:
    if u == 0.0 or i + 1 >= len(values):
        return float(values[i])
    if u == 1.0:
        return float(values[i + 1])
    return float(values[i] * (1.0 - u) + values[i + 1] * u)


def _trapezoid(seg: TrajectorySegment, runs, values: np.ndarray) -> float:
    """Integral over inside pieces of the linear interpolant of per-fix ``values``."""
    t = seg.times
    terms = []
    for run in runs:
        for i, u0, u1 in run:
            if u1 <= u0:
                continue
            ta, tb = piece_time(t, i, u0), piece_time(t, i, u1)
            terms.append(0.5 * (_interp(values, i, u0) + _interp(values, i, u1)) * (tb - ta))
    return math.fsum(terms)


def _covariate(seg: TrajectorySegment, name: str) -> np.ndarray:
    try:
        return seg.covariates[name]
    except KeyError:
        raise MissingCovariate(f"trajectory {seg.traj_id!r} lacks covariate {name!r}") from None


def _z_value(seg: TrajectorySegment, z_source) -> float:
    if isinstance(z_source, (int, float)):
        return float(z_source)
    try:
        return float(z_source)
    except ValueError:
        pass
    return float(_covariate(seg, z_source)[seg.origin_index])


def _alt_threshold(ztilde: str | None) -> float | None:
    if ztilde is None:
        return None
    m = _ALT_BELOW.match(ztilde.strip())
    return float(m.group(1)) if m else None


def _split_at_level(seg: TrajectorySegment, runs, h: float):
    """Sub-pieces of ``runs`` with alt <= h, cut where the interpolated altitude crosses h."""
    alt = seg.alt
    if np.any(np.isnan(alt)):
        raise MissingCovariate(f"trajectory {seg.traj_id!r} lacks altitudes for alt_below({h})")
    out = []
    for run in runs:
        for i, u0, u1 in run:
            if u1 <= u0:
                continue
            a0 = _interp(alt, i, 0.0)
            a1 = _interp(alt, i, 1.0) if i + 1 < len(alt) else a0
            cuts = [u0, u1]
            if a1 != a0:
                uc = (h - a0) / (a1 - a0)
                if u0 < uc < u1:
                    cuts = [u0, uc, u1]
            for ua, ub in zip(cuts[:-1], cuts[1:]):
                if _interp(alt, i, 0.5 * (ua + ub)) <= h:
                    out.append((i, ua, ub))
    return [out] if out else []


# ---------------------------------------------------------------------------
# pointwise measures


def psi_contact(seg: TrajectorySegment, A: Region) -> int:
    """1 if the interpolated path meets the closed region ``A``, else 0."""
    return 1 if _pieces(seg, A) else 0


def clipped_length_km(seg: TrajectorySegment, A: Region, runs=None) -> float:
    runs = _pieces(seg, A) if runs is None else runs
    xy = seg.coords
    terms = []
    for run in runs:
        for i, u0, u1 in run:
            if u1 > u0:
                terms.append(float(lonlat_arc_km(xy[i, 0], xy[i, 1], xy[i + 1, 0], xy[i + 1, 1], u0, u1)))
    return math.fsum(terms)


def psi_contact_min_length(seg: TrajectorySegment, A: Region, min_length_km: float) -> int:
    """1 if the length travelled inside ``A`` exceeds ``min_length_km`` (strictly)."""
    if min_length_km < 0:
        raise ValidationError("min_length_km must be >= 0")
    return 1 if clipped_length_km(seg, A) > min_length_km else 0


def psi_duration(seg: TrajectorySegment, A: Region) -> float:
    """Seconds spent inside ``A``; separate passes are summed."""
    t = seg.times
    terms = []
    for run in _pieces(seg, A):
        for i, u0, u1 in run:
            if u1 > u0:
                terms.append(piece_time(t, i, u1) - piece_time(t, i, u0))
    return math.fsum(terms)


def psi_length(seg: TrajectorySegment, A: Region) -> float:
    """Kilometres travelled inside ``A``."""
    return clipped_length_km(seg, A)


def psi_volume(seg: TrajectorySegment, A: Region, jac: np.ndarray | None = None) -> float:
    """
    Time integral of |det J| over the inside intervals.

    ``jac`` gives det J per fix; by default it is read from the ``jacdet``
    covariate.
    """
    if jac is None:
        jac = seg.covariates.get(JACDET)
        if jac is None:
            raise MissingJacobian(f"trajectory {seg.traj_id!r} has no {JACDET!r} covariate")
    jac = np.abs(np.asarray(jac, dtype=float))
    if jac.shape != seg.times.shape:
        raise ValidationError("jacobian values must match the fixes")
    return _trapezoid(seg, _pieces(seg, A), jac)


def path_velocity_kms(seg: TrajectorySegment) -> np.ndarray:
    """
    East and north velocity (km/s) at each fix by finite differences:
    centred in the interior, one-sided at the ends.
    """
    n = len(seg)
    if n < 2:
        return np.zeros((n, 2))
    lam = np.radians(seg.lon)
    phi = np.radians(seg.lat)
    dlam = np.gradient(lam, seg.times)
    dphi = np.gradient(phi, seg.times)
    return EARTH_RADIUS_KM * np.column_stack([np.cos(phi) * dlam, dphi])


def psi_field(seg: TrajectorySegment, A: Region, g_east: str, g_north: str) -> float:
    """Time integral of |<path velocity, G>| over the inside intervals."""
    ge = _covariate(seg, g_east)
    gn = _covariate(seg, g_north)
    runs = _pieces(seg, A)
    if not runs:
        return 0.0
    v = path_velocity_kms(seg)
    return _trapezoid(seg, runs, np.abs(v[:, 0] * ge + v[:, 1] * gn))


def psi_covariate(seg: TrajectorySegment, A: Region, z_source=1.0, ztilde_source: str | None = None) -> float:
    """
    Z(s, x) times the time integral of Z~ over the inside intervals.

    ``ztilde_source`` is a fix covariate name, ``"alt_below(h)"`` (1 while
    the altitude is at most h metres), or None for the constant 1.
    """
    z = _z_value(seg, z_source)
    runs = _pieces(seg, A)
    if not runs:
        return 0.0
    h = _alt_threshold(ztilde_source)
    if h is not None:
        return z * _trapezoid(seg, _split_at_level(seg, runs, h), np.ones(len(seg)))
    if ztilde_source is None:
        return z * _trapezoid(seg, runs, np.ones(len(seg)))
    return z * _trapezoid(seg, runs, _covariate(seg, ztilde_source))


def _position_at(seg: TrajectorySegment, t: float):
    times = seg.times
    k = int(np.searchsorted(times, t, side="right")) - 1
    k = min(max(k, 0), len(times) - 1)
    if k + 1 >= len(times):
        return k, 0.0
    return k, (t - times[k]) / (times[k + 1] - times[k])


def psi_covariate_measure(seg: TrajectorySegment, A: Region, z_source=1.0, ztilde_source: str | None = None,
                          events: Sequence[tuple[float, float]] = ()) -> float:
    """
    Z(s, x) times the sum over events inside the segment's time span of
    weight x Z~, counting only events at which the particle is in ``A``.
    """
    if not events:
        return 0.0
    z = _z_value(seg, z_source)
    t0, t1 = float(seg.times[0]), float(seg.times[-1])
    h = _alt_threshold(ztilde_source)
    zt = None if (ztilde_source is None or h is not None) else _covariate(seg, ztilde_source)
    lons, lats, locs, ws = [], [], [], []
    for t, w in events:
        if w < 0:
            raise ValidationError("event weights must be non-negative")
        if not (t0 <= t <= t1):
            continue
        i, u = _position_at(seg, t)
        lons.append(_interp(seg.lon, i, u))
        lats.append(_interp(seg.lat, i, u))
        locs.append((i, u))
        ws.append(w)
    if not ws:
        return 0.0
    inside = points_in_region(np.array(lons), np.array(lats), A)
    terms = []
    for ok, (i, u), w in zip(inside, locs, ws):
        if not ok:
            continue
        if h is not None:
            a = _interp(seg.alt, i, u)
            if math.isnan(a):
                raise MissingCovariate(f"trajectory {seg.traj_id!r} lacks altitudes")
            zv = 1.0 if a <= h else 0.0
        elif zt is not None:
            zv = _interp(zt, i, u)
        else:
            zv = 1.0
        terms.append(w * zv)
    return z * math.fsum(terms)


def psi(seg: TrajectorySegment, A: Region, measure: PointwiseMeasure) -> float:
    """Evaluate ``measure`` on one segment and region."""
    k = measure.kind
    if k == "contact":
        return float(psi_contact(seg, A))
    if k == "contact_min_length":
        return float(psi_contact_min_length(seg, A, measure.min_length_km))
    if k == "duration":
        return psi_duration(seg, A)
    if k == "length":
        return psi_length(seg, A)
    if k == "volume":
        return psi_volume(seg, A)
    if k == "field":
        return psi_field(seg, A, measure.g_east, measure.g_north)
    if k == "covariate":
        return psi_covariate(seg, A, measure.z_source, measure.ztilde_source)
    return psi_covariate_measure(seg, A, measure.z_source, measure.ztilde_source, measure.events)


def check_measure_inputs(segments: Iterable[TrajectorySegment], measure: PointwiseMeasure) -> None:
    """Fail early if the corpus lacks a covariate the measure needs."""
    needed = []
    if measure.kind == "volume":
        needed.append(JACDET)
    if measure.kind == "field":
        needed += [measure.g_east, measure.g_north]
    if measure.kind in ("covariate", "covariate_measure"):
        if isinstance(measure.z_source, str):
            try:
                float(measure.z_source)
            except ValueError:
                needed.append(measure.z_source)
        if measure.ztilde_source is not None and _alt_threshold(measure.ztilde_source) is None:
            needed.append(measure.ztilde_source)
    for seg in segments:
        for name in needed:
            if name not in seg.covariates:
                err = MissingJacobian if name == JACDET and measure.kind == "volume" else MissingCovariate
                raise err(f"trajectory {seg.traj_id!r} lacks covariate {name!r}")


# ---------------------------------------------------------------------------
# estimator


def receptor_segments(segments: Iterable[TrajectorySegment], B: Region) -> list[TrajectorySegment]:
    """Segments sampled in ``B``: by receptor id, else by origin position."""
    out = []
    for s in segments:
        if s.receptor_region is not None:
            if s.receptor_region == B.id:
                out.append(s)
        else:
            o = s.origin
            if points_in_region(np.array([o.lon]), np.array([o.lat]), B)[0]:
                out.append(s)
    return out


def estimate_from_values(values: Sequence[float], T_length: float, b_area: float) -> float:
    """(|T| |B| / n) * sum(values), with compensated summation."""
    n = len(values)
    if n == 0:
        raise NoSamples("no sampled trajectories for this receptor")
    return T_length * b_area * (math.fsum(values) / n)


def estimate_integrated(corpus_window, B: Region, A: Region, measure: PointwiseMeasure,
                        cfg: EstimatorConfig | None = None) -> float:
    """
    Monte Carlo estimate of the integrated connectivity from receptor ``B``
    to source ``A`` over one time window.

    With the contact measure this is the share of trajectories sampled in
    ``B`` that meet ``A``, times |T| |B|.

    Raises
    ------
    NoSamples
        If no segment of the window was sampled in ``B``.
    """
    cfg = cfg or EstimatorConfig()
    segs = receptor_segments(corpus_window, B)
    vals = [psi(s, A, measure) for s in segs]
    return estimate_from_values(vals, cfg.T_length, cfg.area_of(B))


# ---------------------------------------------------------------------------
# configuration


MEASURE_KEYS = ("measure", "min_length_km", "alt_threshold_m", "z_source", "ztilde_source",
                "g_east", "g_north", "events_file")


def read_events(path) -> tuple[tuple[float, float], ...]:
    """Events CSV: ``time,weight`` rows (header optional, ISO-8601 or seconds)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "time":
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{lineno}: expected time,weight")
            try:
                out.append((parse_time(row[0].strip()), float(row[1])))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return tuple(out)


def measure_from_mapping(cfg: Mapping[str, str]) -> PointwiseMeasure:
    """
    Build a measure from key-value settings.

    Keys: ``measure``, ``min_length_km``, ``alt_threshold_m``, ``z_source``,
    ``ztilde_source``, ``g_east``, ``g_north``, ``events_file``. A
    ``contact`` measure with ``min_length_km`` becomes
    ``contact_min_length``; ``alt_threshold_m`` sets
    ``ztilde_source = alt_below(h)`` when no other along-path factor is given.
    """
    cfg = {k: v for k, v in cfg.items() if v is not None and str(v).strip() != ""}
    kind = str(cfg.get("measure", "contact")).strip()
    try:
        min_len = float(cfg.get("min_length_km", 0.0))
    except ValueError:
        raise ValidationError("min_length_km must be a number") from None
    if kind == "contact" and "min_length_km" in cfg:
        kind = "contact_min_length"
    z = cfg.get("z_source", 1.0)
    if isinstance(z, str):
        try:
            z = float(z)
        except ValueError:
            z = z.strip()
    ztilde = cfg.get("ztilde_source")
    if ztilde is None and "alt_threshold_m" in cfg:
        try:
            ztilde = f"alt_below({float(cfg['alt_threshold_m'])!r})"
        except ValueError:
            raise ValidationError("alt_threshold_m must be a number") from None
    events = read_events(cfg["events_file"]) if "events_file" in cfg else ()
    return PointwiseMeasure(kind=kind, min_length_km=min_len, z_source=z, ztilde_source=ztilde,
                            g_east=cfg.get("g_east"), g_north=cfg.get("g_north"), events=events)


def read_config(path) -> dict[str, str]:
    """Read a ``key = value`` run configuration (``#`` comments, no sections)."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_string("[run]\n" + fh.read(), source=str(path))
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in cp["run"].items()}
