"""
Pointwise measures and the integrated estimator
===============================================

Each back trajectory is scored against a source region A: did it touch A,
for how long, over what distance, with what weighting. Averaging the scores
of all trajectories that arrived in receptor region B estimates how strongly
A feeds B.

Run with ``python3 demos/02_connectivity_measures.py``.
"""

import math

import numpy as np

from aeronet.connectivity import (
    EstimatorConfig,
    PointwiseMeasure,
    estimate_integrated,
    psi_contact,
    psi_covariate,
    psi_duration,
    psi_length,
    psi_volume,
)
from aeronet.flowsim import Rotation, generate_corpus
from aeronet.geometry import Region
from aeronet.trajectory import TrajectorySegment

###############################################################################
# One hand-made segment crossing a 1 x 1 degree box from west to east in
# three hours.

A = Region("A", [(5.0, 43.0), (6.0, 43.0), (6.0, 44.0), (5.0, 44.0)])
t = np.array([0.0, 3600.0, 7200.0, 10800.0])
seg = TrajectorySegment("demo", 10800.0, t, [4.5, 5.5, 6.5, 7.5], [43.5] * 4, [300.0] * 4)

print("contact  :", psi_contact(seg, A))
print("duration :", psi_duration(seg, A), "s")
print("length   :", round(psi_length(seg, A), 3), "km")
print("covariate, Z = 1 everywhere reduces to duration:", psi_covariate(seg, A, 1.0))

###############################################################################
# Volume weighting multiplies time in A by the Jacobian determinant carried
# along the path. Rotation preserves area, so it matches duration.

box = Region("V", [(0.6, -0.4), (1.4, -0.4), (1.4, 0.4), (0.6, 0.4)])
rot = generate_corpus(Rotation(0.4), [(1.0, 0.9)], [0.0], -8.0, 0.01, 0.1, with_jacobian=True)
print("volume vs duration:", psi_volume(rot.segments[0], box), psi_duration(rot.segments[0], box))

###############################################################################
# The integrated estimator: |T| |B| times the mean score over receptor
# segments. With the contact measure this is the fraction of arrivals in B
# whose back trajectory met A.

B = Region("B", [(0.5, -0.5), (1.5, -0.5), (1.5, 0.5), (0.5, 0.5)])
A2 = Region("A", [(-0.3, -1.3), (0.3, -1.3), (0.3, -0.7), (-0.3, -0.7)])
rng = np.random.default_rng(1)
for n in (20, 80, 320):
    pts = np.column_stack([rng.uniform(0.5, 1.5, n), rng.uniform(-0.5, 0.5, n)])
    corp = generate_corpus(Rotation(math.pi / 2), pts, [0.0], -1.0, 0.01, 0.05, receptors=["B"] * n)
    est = estimate_integrated(corp, B, A2, PointwiseMeasure())
    print(f"n = {n:>3}: contact fraction {est:.3f}")

cfg = EstimatorConfig(T_length=1.0, b_area="km2")
print("duration estimate scaled by |B| in km^2:",
      round(estimate_integrated(corp, B, A2, PointwiseMeasure("duration"), cfg), 1))
