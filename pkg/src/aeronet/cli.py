"""
Command-line pipeline: partitions, corpora, networks, indices, clustering
and appendix tables.

Every command reads an optional ``--config`` file of ``key = value`` lines
(keys are the long option names with dashes or underscores); explicit flags
override it. Data go to files, logs to standard error. Exit codes: 0 on
success, 2 on invalid input or arguments, 3 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .connectivity import EstimatorConfig, MEASURE_KEYS, measure_from_mapping, read_config
from .errors import AeronetError, InvalidGeometry, ValidationError
from .flowsim import generate_corpus, make_field
from .geometry import Partition, buffer_partition, grid_partition
from .metrics import (
    COST_MODES,
    bearing_histogram,
    distance_by_category,
    edge_quantile_categories,
    hclust_complete,
    index_vector,
    read_indices,
    write_bearing_csv,
    write_categories_csv,
    write_distance_csv,
    write_indices,
    write_merge_report,
    write_summary_csv,
)
from .network import DIRECTIONS, NetworkSequence, build_networks, default_threads, read_edges, write_dense, write_edges
from .trajectory import CONTEXTS, TrajectoryCorpus, parse_corpus, parse_time, read_tdump, write_corpus

log = logging.getLogger("aeronet")

EXIT_OK, EXIT_VALIDATION, EXIT_DATA = 0, 2, 3

_DURATION = re.compile(r"^\s*([-+]?\d+(?:\.\d*)?)\s*([smhd]?)\s*$")
_UNIT = {"": 1.0, "s": 1.0, "m": 60.0, "h": 3600.0, "d": 86400.0}


def parse_duration(text: str) -> float:
    """Seconds from ``-48h``, ``90m``, ``3600`` or ``2d``."""
    m = _DURATION.match(str(text))
    if not m:
        raise ValidationError(f"bad duration {text!r}")
    return float(m.group(1)) * _UNIT[m.group(2)]


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise ValidationError(f"{what}: expected {n} comma-separated numbers") from None
    if len(vals) != n:
        raise ValidationError(f"{what}: expected {n} comma-separated numbers")
    return vals


def _need_file(path, what: str) -> Path:
    if path is None:
        raise ValidationError(f"missing --{what}")
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"{what} file not found: {p}")
    return p


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# names that never change outputs
_NOT_FINGERPRINTED = {"threads", "verbose", "config", "func", "out", "out_dir", "dense_dir",
                      "out_newick", "out_report"}
_INPUT_KEYS = {"partition", "corpus", "edges", "indices", "arrivals", "times", "mask", "centers",
               "tdump", "events_file"}


def fingerprint(cmd: str, settings: dict) -> str:
    """
    Hash of a command's effective settings. Input files enter by content
    digest, so the value does not depend on where files live.
    """
    canon = {"command": cmd, "version": __version__}
    for k in sorted(settings):
        if k in _NOT_FINGERPRINTED:
            continue
        v = settings[k]
        if k in _INPUT_KEYS and v is not None:
            paths = v if isinstance(v, list) else [v]
            v = [file_digest(p) if Path(p).is_file() else str(p) for p in paths]
        canon[k] = v
    blob = json.dumps(canon, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# commands


def cmd_grid(s: dict) -> None:
    lon0, lat0, lon1, lat1, cell = _floats(s.get("grid"), 5, "--grid lon0,lat0,lon1,lat1,cell_km")
    mask = Partition.read_geojson(_need_file(s["mask"], "mask"), validate=False) if s.get("mask") else None
    part = grid_partition(lon0, lat0, lon1, lat1, cell, mask=mask)
    part.write_geojson(s["out"], {"config": fingerprint("grid", s), "generator": "grid"})
    log.info("wrote %d grid cells to %s", len(part), s["out"])


def _read_centers(path) -> list[tuple[str, float, float]]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and rows[0][:3] == ["id", "lon", "lat"]:
        rows = rows[1:]
    for k, r in enumerate(rows, start=1):
        if len(r) < 3:
            raise ValidationError(f"{path}: row {k} needs id,lon,lat")
        try:
            out.append((r[0], float(r[1]), float(r[2])))
        except ValueError:
            raise ValidationError(f"{path}: row {k} has a non-numeric coordinate") from None
    return out


def cmd_buffers(s: dict) -> None:
    centers = _read_centers(_need_file(s.get("centers"), "centers"))
    part = buffer_partition(centers, float(s["radius_km"]), int(s["vertices"]))
    part.write_geojson(s["out"], {"config": fingerprint("buffers", s), "generator": "buffers"})
    log.info("wrote %d buffers to %s", len(part), s["out"])


def _read_arrivals(path):
    pts, recs = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and rows[0][:2] == ["x", "y"]:
        rows = rows[1:]
    for k, r in enumerate(rows, start=1):
        try:
            pts.append((float(r[0]), float(r[1])))
        except (ValueError, IndexError):
            raise ValidationError(f"{path}: row {k} needs x,y[,receptor_region]") from None
        recs.append(r[2] if len(r) > 2 and r[2] else None)
    if not pts:
        raise ValidationError(f"{path}: no arrival points")
    return pts, (recs if any(recs) else None)


def _read_times(path) -> list[float]:
    out = []
    for k, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append(parse_time(line))
        except ValueError:
            raise ValidationError(f"{path}:{k}: bad time {line!r}") from None
    return out


def cmd_simulate(s: dict) -> None:
    pts, recs = _read_arrivals(_need_file(s.get("arrivals"), "arrivals"))
    times = _read_times(_need_file(s.get("times"), "times"))
    params = {k: s.get(k) for k in ("u", "v", "omega", "k", "A", "eps")}
    params = {k: float(v) for k, v in params.items() if v is not None}
    if s.get("gyre_omega") is not None:
        params["omega"] = float(s["gyre_omega"])
    if s.get("center"):
        params["center"] = tuple(_floats(s["center"], 2, "--center"))
    if s.get("matrix"):
        a, b, c, d = _floats(s["matrix"], 4, "--matrix")
        params["matrix"] = ((a, b), (c, d))
    try:
        field = make_field(s["field"], **params)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"field {s['field']!r} needs parameter {exc}") from None
    delta = parse_duration(s["delta"])
    fix = parse_duration(s["fix_interval"])
    h = parse_duration(s["h"]) if s.get("h") else fix / 10.0
    anchor = _floats(s["anchor"], 2, "--anchor")
    corpus = generate_corpus(field, pts, times, delta, h, fix, anchor=tuple(anchor),
                             deg_per_unit=float(s["deg_per_unit"]), receptors=recs,
                             with_jacobian=bool(s.get("jacobian")))
    write_corpus(corpus, s["out"], f"aeronet-corpus; config={fingerprint('simulate', s)}")
    log.info("wrote %d trajectories to %s", len(corpus), s["out"])


def _measure_settings(s: dict) -> dict:
    return {k: s.get(k) for k in MEASURE_KEYS}


def cmd_network(s: dict) -> None:
    part = Partition.read_geojson(_need_file(s.get("partition"), "partition"))
    delta = parse_duration(s["delta"]) if s.get("delta") else None
    corpus = parse_corpus(_need_file(s.get("corpus"), "corpus"), delta)
    measure = measure_from_mapping(_measure_settings(s))
    b_area = s.get("b_area") or "unit"
    b_area = {"real": "km2", "km2": "km2", "unit": "unit"}.get(b_area, b_area)
    if b_area not in ("unit", "km2"):
        try:
            b_area = float(b_area)
        except ValueError:
            raise ValidationError("--b-area must be unit, real or a number") from None
    cfg = EstimatorConfig(float(s.get("t_length") or 1.0), b_area)
    seq = build_networks(corpus, part, measure, cfg, s["context"], s["edge_direction"], int(s["threads"]))
    fp = fingerprint("network", s)
    write_edges(seq, s["out"], {"context": s["context"], "config": fp})
    if s.get("dense_dir"):
        write_dense(seq, s["dense_dir"], f"# config={fp}; direction={seq.direction}")
    log.info("wrote %d windows (%d nodes) to %s", len(seq), len(seq.node_ids), s["out"])


def _read_networks(paths) -> list:
    out = []
    for p in paths:
        out.extend(read_edges(_need_file(p, "edges")).windows)
    return out


def cmd_indices(s: dict) -> None:
    windows = _read_networks(s["edges"])
    seed = int(s["seed"])
    vecs = [index_vector(w, s["cost_mode"], int(s["n_null"]), seed, s["sf_mode"]) for w in windows]
    for v in vecs:
        for k, e in v.errors.items():
            log.warning("window %s: %s undefined (%s)", v.window_id, k, e)
    write_indices(vecs, s["out"], {"config": fingerprint("indices", s)})
    log.info("wrote indices of %d windows to %s", len(vecs), s["out"])


def cmd_cluster(s: dict) -> None:
    vecs = read_indices(_need_file(s.get("indices"), "indices"))
    d = hclust_complete(vecs, standardize=not s.get("raw"), on_absent=s["on_absent"])
    fp = fingerprint("cluster", s)
    text = f"[config={fp}; dims={','.join(d.dims)}]\n{d.to_newick()}\n"
    Path(s["out_newick"]).write_text(text, encoding="utf-8")
    if s.get("out_report"):
        k = int(s["k"]) if s.get("k") else None
        write_merge_report(d, s["out_report"], k, f"# aeronet-cluster v1; config={fp}")
    log.info("clustered %d windows", len(vecs))


def cmd_appendix(s: dict) -> None:
    part = Partition.read_geojson(_need_file(s.get("partition"), "partition"))
    nets = [read_edges(_need_file(p, "edges")) for p in s["edges"]]
    windows = [w for n in nets for w in n.windows]
    if s.get("edge_direction"):
        windows = [w.as_direction(s["edge_direction"]) for w in windows]
    cats = edge_quantile_categories(windows, int(s["bins"]))
    out = Path(s["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    head = f"# aeronet-appendix v1; config={fingerprint('appendix', s)}"
    dist = distance_by_category(cats, part)
    write_categories_csv(cats, out / "categories.csv", head)
    write_distance_csv(dist, out / "distance_by_category.csv", head)
    write_summary_csv(dist, out / "distance_summary.csv", head)
    write_bearing_csv(bearing_histogram(cats, part, int(s["sectors"])), out / "bearing_histogram.csv", head)
    log.info("wrote appendix tables to %s", out)


def cmd_convert_tdump(s: dict) -> None:
    segs = []
    for p in s["tdump"]:
        segs.extend(read_tdump(_need_file(p, "tdump"), s.get("receptor_region")))
    delta = parse_duration(s["delta"]) if s.get("delta") else None
    corpus = TrajectoryCorpus.from_segments(segs, delta)
    write_corpus(corpus, s["out"], f"aeronet-corpus; config={fingerprint('convert-tdump', s)}")
    log.info("converted %d trajectories to %s", len(corpus), s["out"])


# ---------------------------------------------------------------------------
# argument parsing


def _global_options(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="key = value settings file")
    p.add_argument("--seed", type=int, default=d, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=d, help="worker threads (default: CPU count)")
    p.add_argument("--edge-direction", choices=DIRECTIONS, default=d, help="edge orientation (default transport)")
    p.add_argument("--cost-mode", choices=COST_MODES, default=d, help="shortest-path cost (default reciprocal)")
    p.add_argument("--b-area", default=d, help="receptor area |B|: unit (default), real (km^2) or a number")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


GLOBAL_DEFAULTS = {"seed": 0, "threads": None, "edge_direction": "transport", "cost_mode": "reciprocal",
                   "b_area": "unit"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aeronet", description="Trajectory-based connectivity networks.",
                                 allow_abbrev=False)
    ap.add_argument("--version", action="version", version=f"aeronet {__version__}")
    _global_options(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_, allow_abbrev=False)
        _global_options(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("grid", cmd_grid, "Regular grid partition as GeoJSON.")
    p.add_argument("--grid", default=S, help="lon0,lat0,lon1,lat1,cell_km")
    p.add_argument("--mask", default=S, help="GeoJSON mask; keep cells whose centroid falls inside")
    p.add_argument("--out", default=S)

    p = add("buffers", cmd_buffers, "Geodesic circular buffers around centres as GeoJSON.")
    p.add_argument("--centers", default=S, help="CSV id,lon,lat")
    p.add_argument("--radius-km", type=float, default=S)
    p.add_argument("--vertices", type=int, default=S, help="polygon vertices (default 64)")
    p.add_argument("--out", default=S)

    p = add("simulate", cmd_simulate, "Trajectory corpus of a synthetic flow (TrajCsvV1).")
    p.add_argument("--field", default=S, help="uniform, rotation, shear, double_gyre or linear")
    for k in ("u", "v", "omega", "k", "A", "eps"):
        p.add_argument(f"--{k}", type=float, default=S)
    p.add_argument("--gyre-omega", type=float, default=S, help="double-gyre angular frequency")
    p.add_argument("--center", default=S, help="rotation centre x,y")
    p.add_argument("--matrix", default=S, help="linear field a,b,c,d for [[a,b],[c,d]]")
    p.add_argument("--arrivals", default=S, help="CSV x,y[,receptor_region]")
    p.add_argument("--times", default=S, help="one arrival time per line (ISO-8601 or seconds)")
    p.add_argument("--delta", default=S, help="signed lag, e.g. -48h")
    p.add_argument("--fix-interval", default=S, help="fix spacing, e.g. 1h")
    p.add_argument("--h", default=S, help="RK4 step (default fix interval / 10)")
    p.add_argument("--anchor", default=S, help="lon,lat of the planar origin")
    p.add_argument("--deg-per-unit", type=float, default=S)
    p.add_argument("--jacobian", action="store_true", default=S, help="add the jacdet covariate")
    p.add_argument("--out", default=S)

    p = add("network", cmd_network, "Windowed networks from a corpus and a partition.")
    p.add_argument("--partition", default=S)
    p.add_argument("--corpus", default=S)
    p.add_argument("--context", choices=CONTEXTS + ("monthly-pooled",), default=S)
    p.add_argument("--measure", default=S)
    p.add_argument("--min-length-km", default=S)
    p.add_argument("--alt-threshold-m", default=S)
    p.add_argument("--z-source", default=S)
    p.add_argument("--ztilde-source", default=S)
    p.add_argument("--g-east", default=S)
    p.add_argument("--g-north", default=S)
    p.add_argument("--events-file", default=S)
    p.add_argument("--t-length", default=S, help="|T| (default 1)")
    p.add_argument("--delta", default=S, help="declared lag to check against the corpus")
    p.add_argument("--dense-dir", default=S, help="also write one dense CSV matrix per window here")
    p.add_argument("--out", default=S)

    p = add("indices", cmd_indices, "Network indices per window.")
    p.add_argument("--edges", nargs="+", default=S)
    p.add_argument("--n-null", type=int, default=S, help="null-model replicates (default 20)")
    p.add_argument("--sf-mode", choices=("in", "out", "total"), default=S)
    p.add_argument("--out", default=S)

    p = add("cluster", cmd_cluster, "Complete-linkage clustering of index vectors.")
    p.add_argument("--indices", default=S)
    p.add_argument("--raw", action="store_true", default=S, help="skip z-score standardization")
    p.add_argument("--on-absent", choices=("drop", "error"), default=S)
    p.add_argument("--k", type=int, default=S, help="also report k flat clusters")
    p.add_argument("--out-newick", default=S)
    p.add_argument("--out-report", default=S)

    p = add("appendix", cmd_appendix, "Edge categories, distance samples and bearing histograms.")
    p.add_argument("--edges", nargs="+", default=S)
    p.add_argument("--partition", default=S)
    p.add_argument("--bins", type=int, default=S)
    p.add_argument("--sectors", type=int, default=S)
    p.add_argument("--out-dir", default=S)

    p = add("convert-tdump", cmd_convert_tdump, "Convert HYSPLIT tdump files to TrajCsvV1.")
    p.add_argument("--tdump", nargs="+", default=S)
    p.add_argument("--receptor-region", default=S)
    p.add_argument("--delta", default=S)
    p.add_argument("--out", default=S)
    return ap


COMMAND_DEFAULTS = {
    "grid": {"mask": None},
    "buffers": {"vertices": 64, "radius_km": 20.0},
    "simulate": {"field": "uniform", "delta": "-48h", "fix_interval": "1h", "h": None, "anchor": "0,0",
                 "deg_per_unit": 1.0, "jacobian": False},
    "network": {"context": "whole", "measure": "contact", "t_length": 1.0, "delta": None, "dense_dir": None},
    "indices": {"n_null": 20, "sf_mode": "total"},
    "cluster": {"raw": False, "on_absent": "drop", "k": None, "out_report": None},
    "appendix": {"bins": 5, "sectors": 16, "edge_direction": None},
    "convert-tdump": {"receptor_region": None, "delta": None},
}
REQUIRED_OUT = {"out_dir": ("appendix",), "out_newick": ("cluster",)}
_LIST_KEYS = {"edges", "tdump"}
_BOOL_KEYS = {"raw", "jacobian"}
_INT_KEYS = {"seed", "threads", "n_null", "vertices", "bins", "sectors", "k"}


def resolve_settings(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cmd = args.command
    s = dict(GLOBAL_DEFAULTS)
    s.update(COMMAND_DEFAULTS.get(cmd, {}))
    given = {k: v for k, v in vars(args).items() if k not in ("command", "func")}
    cfg_path = given.get("config")
    if cfg_path:
        for k, v in read_config(_need_file(cfg_path, "config")).items():
            if k in _LIST_KEYS:
                v = v.split()
            elif k in _BOOL_KEYS:
                v = v.strip().lower() in ("1", "true", "yes", "on")
            elif k in _INT_KEYS:
                try:
                    v = int(v)
                except ValueError:
                    raise ValidationError(f"config key {k!r} must be an integer") from None
            s[k] = v
    for k, v in given.items():
        if v is not None:
            s[k] = v
    if s.get("threads") is None:
        s["threads"] = default_threads()
    if int(s["threads"]) < 1:
        raise ValidationError("--threads must be >= 1")
    if s.get("edge_direction") is not None and s["edge_direction"] not in DIRECTIONS:
        raise ValidationError(f"edge_direction must be one of {DIRECTIONS}")
    if s.get("cost_mode") not in COST_MODES:
        raise ValidationError(f"cost_mode must be one of {COST_MODES}")
    if cmd == "network" and s.get("context") == "monthly-pooled":
        s["context"] = "monthly"
    needs_out = "out" if cmd not in ("appendix", "cluster") else ("out_dir" if cmd == "appendix" else "out_newick")
    if not s.get(needs_out):
        raise ValidationError(f"missing --{needs_out.replace('_', '-')}")
    if cmd in ("indices", "appendix") and not s.get("edges"):
        raise ValidationError("missing --edges")
    if cmd == "convert-tdump" and not s.get("tdump"):
        raise ValidationError("missing --tdump")
    return s


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    level = logging.DEBUG if getattr(args, "verbose", 0) else logging.INFO
    logging.basicConfig(stream=sys.stderr, level=level, format="aeronet %(levelname)s: %(message)s", force=True)
    logging.captureWarnings(True)
    try:
        s = resolve_settings(args)
        args.func(s)
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (AeronetError, ValueError, KeyError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
