"""
Clustering windows and describing edges
=======================================

Index vectors from several windows (months, years) are grouped by
complete-linkage clustering. Edges are split into weight quantiles and each
class is described by the distance and bearing between its endpoints.

Run with ``python3 demos/04_clustering_and_appendix.py``.
"""

import math
import warnings

import numpy as np

from aeronet.connectivity import PointwiseMeasure
from aeronet.flowsim import Uniform, generate_corpus
from aeronet.geometry import grid_partition, sample_points
from aeronet.metrics import (
    bearing_histogram,
    distance_by_category,
    edge_quantile_categories,
    five_number_summary,
    hclust_complete,
    index_vector,
)
from aeronet.network import build_networks
from aeronet.trajectory import TrajectoryCorpus

###############################################################################
# Hand-traced case: points 0, 1 and 10 on a line. The first merge joins 0
# and 1 at height 1; the second joins {0, 1} with 10 at height 10, the
# farthest pair under complete linkage.

d = hclust_complete([[0.0], [1.0], [10.0]], standardize=False, labels=["a", "b", "c"])
print("merges:", d.merges)
print("newick:", d.to_newick())

###############################################################################
# Monthly networks from a corpus whose wind speed changes with the season,
# then clustering of their index vectors.

grid = grid_partition(5.0, 42.0, 8.6, 44.6, 74.0)
pts, recs = [], []
for k, r in enumerate(grid):
    for p in sample_points(r, 1, seed=k):
        pts.append((p.lon, p.lat))
        recs.append(r.id)
deg_per_m = 1.0 / (1000.0 * 6371.0088 * math.pi / 180 * math.cos(math.radians(43.3)))
segs = []
for day in range(0, 365, 3):
    speed = 2.0 + 1.5 * math.sin(2 * math.pi * day / 365)  # m/s
    wobble = 0.3 * math.cos(2 * math.pi * day / 30)
    f = Uniform(speed * deg_per_m, wobble * deg_per_m)
    segs += generate_corpus(f, pts, [1293883200.0 + 86400.0 * day], -86400.0, 900.0, 3600.0,
                            receptors=recs, id_prefix=f"d{day:03d}")
seq = build_networks(TrajectoryCorpus.from_segments(segs), grid, PointwiseMeasure("duration"), context="monthly")

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    vectors = [index_vector(w.weights, n_null=10, seed=1, window_id=w.window_id) for w in seq]
    tree = hclust_complete(vectors)  # dimensions missing in any window are dropped
print("monthly tree:", tree.to_newick())
print("two groups:", tree.cut(2))

###############################################################################
# Edge classes. Strong edges join neighbouring cells along the wind; weak
# ones span longer distances.

cats = edge_quantile_categories(seq["01"], n_bins=5)
dist = distance_by_category(cats, grid)
for c in sorted(dist):
    print(f"category {c}: distance five-number summary (km)",
          np.round(five_number_summary(dist[c]), 0))
hist = bearing_histogram(cats, grid)
top = max(hist)
print(f"category {top} bearings by 22.5 degree sector from north:", hist[top].tolist())
