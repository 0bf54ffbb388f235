"""
Flows and synthetic trajectory corpora
======================================

A velocity field defines a flow map Phi(t, s, x): where a parcel sitting at
``x`` at time ``s`` has moved to by time ``t``. Running the map backwards
from arrival points gives back trajectories, the raw material of every
connectivity estimate downstream.

Run with ``python3 demos/01_flows_and_corpus.py``.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from aeronet.flowsim import (
    DoubleGyre,
    Linear,
    Rotation,
    flow_inverse_residual,
    flow_semigroup_residual,
    generate_corpus,
    integrate_flow,
    jacobian_det,
)
from aeronet.trajectory import parse_corpus, window_corpus, write_corpus

###############################################################################
# A solid-body rotation moves (1, 0) a quarter turn in pi/2 time units.

F = Rotation(1.0)
x = integrate_flow(F, 0.0, math.pi / 2, np.array([1.0, 0.0]), h=1e-3)
print("rotation, quarter turn:", np.round(x, 9))

###############################################################################
# The flow map composes (Phi(t, t', Phi(t', s, x)) = Phi(t, s, x)) and inverts
# (Phi(s, t, Phi(t, s, x)) = x). Fixed-step RK4 keeps both residuals at round-off.

pts = np.random.default_rng(0).uniform([0, 0], [2, 1], size=(16, 2))
gyre = DoubleGyre()
print("double gyre semigroup residual:", flow_semigroup_residual(gyre, 0.0, 4.0, 7.0, pts, 1e-3))
print("double gyre inverse residual:  ", flow_inverse_residual(gyre, 0.0, 7.0, pts, 1e-3))

###############################################################################
# The Jacobian determinant measures how much a small patch of air is
# stretched. For a divergence-free field it stays 1; for a linear field it
# grows as exp(trace * (t - s)).

print("det J, double gyre:", jacobian_det(gyre, 0.0, 5.0, pts[:3], 1e-2))
lin = Linear(((1.0, 0.0), (0.0, -0.5)))
print("det J, linear field:", jacobian_det(lin, 0.0, 2.0, pts[:1], 1e-3)[0], "expected", math.exp(1.0))

###############################################################################
# A corpus: backward trajectories from three arrival points on five
# consecutive days, written to the trajectory CSV format and read back.

arrivals = [(0.5, 0.5), (1.0, 0.5), (1.5, 0.5)]
days = 1293883200.0 + 86400.0 * np.arange(5)  # 2011-01-01 12:00 UTC onwards
corpus = generate_corpus(gyre, arrivals, days, -6.0, 0.01, 0.5, anchor=(5.0, 43.0), deg_per_unit=0.5)
print(f"{len(corpus)} segments, each with {len(corpus.segments[0].times)} fixes")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.csv"
    write_corpus(corpus, path, comment="demo corpus")
    back = parse_corpus(path)
    print("round trip keeps", len(back), "segments; first id", back.segments[0].traj_id)

###############################################################################
# Windows group segments by the sample time of their arrival.

for wid, segs in window_corpus(corpus, "monthly").items():
    print("window", wid, "->", len(segs), "segments")
