"""
Trajectory-based connectivity networks.

Turns corpora of time-stamped trajectories and a spatial partition into
directed, weighted, time-windowed networks, then computes network indices,
complete-linkage clustering of windows and edge-category statistics.
"""

__version__ = "0.1.0"

from .connectivity import EstimatorConfig, PointwiseMeasure, estimate_integrated, psi
from .geometry import GeoPoint, Partition, Region, clip_polyline, haversine_km, initial_bearing_deg
from .network import NetworkSequence, WindowedAdjacency, build_networks, read_edges, write_edges
from .trajectory import TrajectoryCorpus, TrajectorySegment, parse_corpus, window_corpus, write_corpus

__all__ = [
    "EstimatorConfig",
    "GeoPoint",
    "NetworkSequence",
    "Partition",
    "PointwiseMeasure",
    "Region",
    "TrajectoryCorpus",
    "TrajectorySegment",
    "WindowedAdjacency",
    "build_networks",
    "clip_polyline",
    "estimate_integrated",
    "haversine_km",
    "initial_bearing_deg",
    "parse_corpus",
    "psi",
    "read_edges",
    "window_corpus",
    "write_corpus",
    "write_edges",
]
