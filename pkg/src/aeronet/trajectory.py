"""
Trajectory segments and corpora.

Fixes are stored in ascending time order as numpy arrays. A backward
segment has its sample time at the last fix, a forward one at the first.
The canonical on-disk format is TrajCsvV1::

    traj_id,receptor_region,sample_time,point_time,lon_deg,lat_deg,alt_m[,cov:<name>...]
"""

from __future__ import annotations

import csv
import math
import re
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DeltaMismatch,
    EmptyCorpus,
    MalformedRow,
    MixedDeltaSign,
    NonMonotoneTime,
)
from .geometry import GeoPoint

TRAJ_CSV_COLUMNS = ("traj_id", "receptor_region", "sample_time", "point_time", "lon_deg", "lat_deg", "alt_m")
COV_PREFIX = "cov:"


def parse_time(text: str) -> float:
    """ISO-8601 UTC timestamp (or plain POSIX seconds) to POSIX seconds."""
    s = text.strip()
    try:
        return float(s)
    except ValueError:
        pass
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_time(t: float) -> str:
    """POSIX seconds to ``YYYY-MM-DDTHH:MM:SS[.ffffff]Z`` (microsecond resolution)."""
    whole = math.floor(t)
    micro = round((t - whole) * 1e6)
    if micro == 1_000_000:
        whole, micro = whole + 1, 0
    dt = datetime.fromtimestamp(whole, tz=timezone.utc)
    out = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if micro:
        out += f".{micro:06d}"
    return out + "Z"


def _fmt_float(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class TrajectorySegment:
    """
    Time-stamped path of one particle over the interval between its sample
    time and ``sample_time + delta``.

    ``alt`` holds NaN where altitude is absent. ``covariates`` maps a name to
    one value per fix. ``quality`` is ``"ok"`` or ``"truncated"`` (shorter
    than the corpus lag by more than one fix interval).
    """

    traj_id: str
    sample_time: float
    times: np.ndarray
    lon: np.ndarray
    lat: np.ndarray
    alt: np.ndarray
    receptor_region: str | None = None
    covariates: Mapping[str, np.ndarray] = field(default_factory=dict)
    quality: str = "ok"

    def __post_init__(self):
        n = len(self.times)
        if n == 0:
            raise ValueError(f"trajectory {self.traj_id!r} has no fixes")
        arrs = {}
        for name in ("times", "lon", "lat", "alt"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != (n,):
                raise ValueError(f"trajectory {self.traj_id!r}: {name} has shape {a.shape}, expected ({n},)")
            a.setflags(write=False)
            arrs[name] = a
            object.__setattr__(self, name, a)
        covs = {}
        for k, v in dict(self.covariates).items():
            a = np.array(v, dtype=float)
            if a.shape != (n,):
                raise ValueError(f"trajectory {self.traj_id!r}: covariate {k!r} has wrong length")
            a.setflags(write=False)
            covs[k] = a
        object.__setattr__(self, "covariates", covs)
        if n > 1 and np.any(np.diff(arrs["times"]) <= 0):
            raise NonMonotoneTime(self.traj_id)
        if not (np.all(np.isfinite(arrs["lon"])) and np.all(np.isfinite(arrs["lat"]))):
            raise ValueError(f"trajectory {self.traj_id!r} has non-finite positions")
        if np.any(np.abs(arrs["lon"]) > 180) or np.any(np.abs(arrs["lat"]) > 90):
            raise ValueError(f"trajectory {self.traj_id!r} has positions out of range")
        if self.sample_time not in (arrs["times"][0], arrs["times"][-1]):
            raise ValueError(f"trajectory {self.traj_id!r}: sample_time is neither the first nor the last fix time")
        if self.receptor_region == "":
            object.__setattr__(self, "receptor_region", None)

    def __len__(self):
        return len(self.times)

    @property
    def origin_index(self) -> int:
        return len(self.times) - 1 if self.sample_time == self.times[-1] and len(self.times) > 1 else 0

    @property
    def direction(self) -> int:
        """+1 forward, -1 backward, 0 for a single fix."""
        if len(self.times) == 1:
            return 0
        return -1 if self.origin_index == len(self.times) - 1 else 1

    @property
    def span(self) -> float:
        """Signed lag covered by the segment (negative when backward)."""
        return self.direction * float(self.times[-1] - self.times[0])

    @property
    def origin(self) -> GeoPoint:
        k = self.origin_index
        alt = float(self.alt[k])
        return GeoPoint(float(self.lon[k]), float(self.lat[k]), None if math.isnan(alt) else alt)

    @property
    def coords(self) -> np.ndarray:
        return np.column_stack([self.lon, self.lat])

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (float(self.lon.min()), float(self.lat.min()), float(self.lon.max()), float(self.lat.max()))

    def same_fixes(self, other: "TrajectorySegment") -> bool:
        if self.traj_id != other.traj_id or self.sample_time != other.sample_time:
            return False
        if self.receptor_region != other.receptor_region or self.covariates.keys() != other.covariates.keys():
            return False
        pairs = [(self.times, other.times), (self.lon, other.lon), (self.lat, other.lat), (self.alt, other.alt)]
        pairs += [(self.covariates[k], other.covariates[k]) for k in self.covariates]
        return all(np.array_equal(a, b, equal_nan=True) for a, b in pairs)


@dataclass(frozen=True, eq=False)
class TrajectoryCorpus:
    segments: tuple[TrajectorySegment, ...]
    delta_seconds: float
    fix_interval: float

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def time_extent(self) -> tuple[float, float]:
        st = [s.sample_time for s in self.segments]
        return (min(st), max(st))

    @classmethod
    def from_segments(cls, segments: Iterable[TrajectorySegment], delta_seconds: float | None = None,
                      fix_interval: float | None = None) -> "TrajectoryCorpus":
        """
        Build a corpus, inferring the signed lag from the longest segment.

        A declared ``delta_seconds`` is checked against the inferred one;
        a mismatch beyond one fix interval raises DeltaMismatch. Segments
        shorter than the lag by more than one fix interval are kept and
        marked ``quality="truncated"``.
        """
        segs = list(segments)
        if not segs:
            raise EmptyCorpus("corpus has no trajectories")
        dirs = {s.direction for s in segs if s.direction != 0}
        if len(dirs) > 1:
            raise MixedDeltaSign("corpus mixes forward and backward trajectories")
        if fix_interval is None:
            diffs = [np.diff(s.times) for s in segs if len(s) > 1]
            fix_interval = float(np.median(np.concatenate(diffs))) if diffs else 0.0
        if dirs:
            sign = dirs.pop()
            if delta_seconds and math.copysign(1, delta_seconds) != sign:
                raise MixedDeltaSign("declared lag sign disagrees with the trajectories")
        else:
            sign = -1 if delta_seconds is not None and delta_seconds < 0 else 1
        inferred = sign * max(abs(s.span) for s in segs)
        if delta_seconds is None:
            delta = inferred
        else:
            if abs(inferred - delta_seconds) > fix_interval:
                raise DeltaMismatch(
                    f"declared lag {delta_seconds} s differs from data extent {inferred} s "
                    f"by more than one fix interval ({fix_interval} s)"
                )
            delta = float(delta_seconds)
        marked = []
        for s in segs:
            q = "truncated" if abs(s.span) < abs(delta) - fix_interval else "ok"
            marked.append(s if s.quality == q else replace(s, quality=q))
        return cls(tuple(marked), float(delta), float(fix_interval))

    def subset(self, segments: Iterable[TrajectorySegment]) -> "TrajectoryCorpus":
        return TrajectoryCorpus(tuple(segments), self.delta_seconds, self.fix_interval)


# ---------------------------------------------------------------------------
# TrajCsvV1


def parse_corpus(path, delta_seconds: float | None = None) -> TrajectoryCorpus:
    """
    Read a TrajCsvV1 file. Lines starting with ``#`` before the header
    are provenance comments and are skipped.

    Raises
    ------
    MalformedRow, NonMonotoneTime, MixedDeltaSign, EmptyCorpus
    """
    with open(path, newline="", encoding="utf-8") as fh:
        skipped = 0
        pos = fh.tell()
        while fh.readline().startswith("#"):
            skipped += 1
            pos = fh.tell()
        fh.seek(pos)
        hline = skipped + 1
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(hline, "missing header") from None
        if tuple(header[: len(TRAJ_CSV_COLUMNS)]) != TRAJ_CSV_COLUMNS:
            raise MalformedRow(hline, f"header must start with {','.join(TRAJ_CSV_COLUMNS)}")
        cov_cols = header[len(TRAJ_CSV_COLUMNS):]
        for c in cov_cols:
            if not c.startswith(COV_PREFIX) or len(c) == len(COV_PREFIX):
                raise MalformedRow(hline, f"extra column {c!r} lacks the {COV_PREFIX!r} prefix")
        cov_names = [c[len(COV_PREFIX):] for c in cov_cols]
        width = len(header)

        segments: list[TrajectorySegment] = []
        seen: set[str] = set()
        cur: dict | None = None

        def flush():
            if cur is None:
                return
            t = np.array(cur["t"])
            if len(t) > 1 and np.any(np.diff(t) <= 0):
                raise NonMonotoneTime(cur["id"])
            try:
                seg = TrajectorySegment(
                    traj_id=cur["id"], sample_time=cur["st"], times=t,
                    lon=cur["lon"], lat=cur["lat"], alt=cur["alt"],
                    receptor_region=cur["rec"] or None,
                    covariates={k: v for k, v in zip(cov_names, cur["cov"])},
                )
            except NonMonotoneTime:
                raise
            except ValueError as exc:
                raise MalformedRow(cur["line"], str(exc)) from None
            segments.append(seg)

        for lineno, row in enumerate(reader, start=hline + 1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise MalformedRow(lineno, f"expected {width} fields, got {len(row)}")
            tid, rec, st_s, pt_s, lon_s, lat_s, alt_s = row[:7]
            try:
                st = parse_time(st_s)
                pt = parse_time(pt_s)
                lon = float(lon_s)
                lat = float(lat_s)
                alt = float(alt_s) if alt_s.strip() else math.nan
                covs = [float(v) for v in row[7:]]
            except ValueError as exc:
                raise MalformedRow(lineno, str(exc)) from None
            if not tid:
                raise MalformedRow(lineno, "empty traj_id")
            if not (math.isfinite(lon) and math.isfinite(lat)) or abs(lon) > 180 or abs(lat) > 90:
                raise MalformedRow(lineno, "position out of range")
            if any(not math.isfinite(v) for v in covs) or (alt_s.strip() and not math.isfinite(alt)):
                raise MalformedRow(lineno, "non-finite value")
            if cur is None or cur["id"] != tid:
                flush()
                if tid in seen:
                    raise MalformedRow(lineno, f"rows of trajectory {tid!r} are not contiguous")
                seen.add(tid)
                cur = {"id": tid, "rec": rec, "st": st, "line": lineno, "t": [], "lon": [], "lat": [],
                       "alt": [], "cov": [[] for _ in cov_names]}
            elif cur["st"] != st or cur["rec"] != rec:
                raise MalformedRow(lineno, f"sample_time/receptor_region changes within trajectory {tid!r}")
            cur["t"].append(pt)
            cur["lon"].append(lon)
            cur["lat"].append(lat)
            cur["alt"].append(alt)
            for lst, v in zip(cur["cov"], covs):
                lst.append(v)
        flush()
    if not segments:
        raise EmptyCorpus(f"{path}: no trajectory rows")
    return TrajectoryCorpus.from_segments(segments, delta_seconds)


def write_corpus(corpus: TrajectoryCorpus | Sequence[TrajectorySegment], path, comment: str | None = None) -> None:
    """
    Write segments as TrajCsvV1 (floats in shortest round-trip form).

    ``comment`` is written first as a ``#`` provenance line.
    """
    segs = list(corpus)
    names = list(segs[0].covariates) if segs else []
    for s in segs:
        if list(s.covariates) != names:
            raise ValueError("all segments must carry the same covariates to be written as TrajCsvV1")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write("# " + comment.replace("\n", " ") + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(TRAJ_CSV_COLUMNS) + [COV_PREFIX + n for n in names])
        for s in segs:
            st = format_time(s.sample_time)
            rec = s.receptor_region or ""
            for k in range(len(s)):
                w.writerow(
                    [s.traj_id, rec, st, format_time(float(s.times[k])), _fmt_float(s.lon[k]),
                     _fmt_float(s.lat[k]), _fmt_float(s.alt[k])]
                    + [_fmt_float(s.covariates[n][k]) for n in names]
                )


# ---------------------------------------------------------------------------
# temporal contexts

CONTEXTS = ("whole", "yearly", "monthly")


def window_corpus(c: TrajectoryCorpus, context: str) -> "OrderedDict[str, TrajectoryCorpus]":
    """
    Split a corpus into time windows by UTC sample time.

    ``whole`` gives one window keyed ``"whole"``; ``yearly`` keys by year
    (``"2011"``); ``monthly`` pools each calendar month across years and
    keys ``"01"``..``"12"``.
    """
    if context in ("monthly-pooled", "monthly_pooled"):
        context = "monthly"
    if context not in CONTEXTS:
        raise ValueError(f"unknown temporal context {context!r}; expected one of {CONTEXTS}")
    if len(c) == 0:
        raise EmptyCorpus("cannot window an empty corpus")
    if context == "whole":
        return OrderedDict([("whole", c)])
    groups: dict[str, list[TrajectorySegment]] = {}
    for s in c:
        dt = datetime.fromtimestamp(s.sample_time, tz=timezone.utc)
        key = f"{dt.year:04d}" if context == "yearly" else f"{dt.month:02d}"
        groups.setdefault(key, []).append(s)
    return OrderedDict((k, c.subset(groups[k])) for k in sorted(groups))


# ---------------------------------------------------------------------------
# HYSPLIT tdump


def read_tdump(path, receptor_region: str | None = None, traj_prefix: str | None = None) -> list[TrajectorySegment]:
    """
    Convert a HYSPLIT tdump file to trajectory segments.

    Fields map one to one: position and height become lon/lat/alt,
    diagnostic variables become covariates, the age-zero fix is the
    sample time.
    """
    lines = Path(path).read_text(encoding="utf-8", errors="replace").splitlines()
    prefix = traj_prefix if traj_prefix is not None else Path(path).stem
    pos = 0

    def nxt():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise MalformedRow(pos + 1, "unexpected end of tdump file")
        pos += 1
        return pos, lines[pos - 1].split()

    ln, f = nxt()
    try:
        n_grids = int(f[0])
        for _ in range(n_grids):
            nxt()
        ln, f = nxt()
        n_traj = int(f[0])
        for _ in range(n_traj):
            nxt()
        ln, f = nxt()
        n_diag = int(f[0])
    except (ValueError, IndexError):
        raise MalformedRow(ln, "bad tdump header") from None
    diag = list(f[1 : 1 + n_diag])
    while len(diag) < n_diag:
        ln, more = nxt()
        diag.extend(more)
    rows: dict[int, list] = {}
    for k in range(pos, len(lines)):
        f = lines[k].split()
        if not f:
            continue
        if len(f) < 12 + n_diag:
            raise MalformedRow(k + 1, "short tdump data row")
        try:
            tid = int(f[0])
            yy, mm, dd, hh, mi = (int(v) for v in f[2:7])
            age = float(f[8])
            lat, lon, hgt = float(f[9]), float(f[10]), float(f[11])
            dvals = [float(v) for v in f[12 : 12 + n_diag]]
        except ValueError:
            raise MalformedRow(k + 1, "non-numeric tdump field") from None
        year = yy + (2000 if yy < 50 else 1900) if yy < 100 else yy
        t = datetime(year, mm, dd, hh, mi, tzinfo=timezone.utc).timestamp()
        rows.setdefault(tid, []).append((t, age, lon, lat, hgt, dvals))
    segs = []
    for tid in sorted(rows):
        recs = sorted(rows[tid], key=lambda r: r[0])
        zero = [r for r in recs if r[1] == 0.0]
        st = zero[0][0] if zero else recs[-1][0]
        segs.append(TrajectorySegment(
            traj_id=f"{prefix}-{tid}", sample_time=st,
            times=[r[0] for r in recs], lon=[r[2] for r in recs], lat=[r[3] for r in recs],
            alt=[r[4] for r in recs], receptor_region=receptor_region,
            covariates={re.sub(r"\W+", "_", d).lower(): [r[5][j] for r in recs] for j, d in enumerate(diag)},
        ))
    return segs
