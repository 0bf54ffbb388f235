"""
Synthetic planar flows with known ground truth.

Fields are callables ``F(t, xy) -> velocity`` acting on arrays whose last
axis has length 2. Flow maps are computed with fixed-step classical RK4;
the state update uses compensated summation so that long runs of small
steps do not accumulate rounding drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BlowUp, EmptyCorpus
from .trajectory import TrajectoryCorpus, TrajectorySegment

BLOWUP_NORM = 1e12
MAX_STEPS = 10**8


class VectorField:
    name = "field"
    divergence_free = False

    def __call__(self, t: float, xy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class Uniform(VectorField):
    u: float
    v: float
    name = "uniform"
    divergence_free = True

    def __call__(self, t, xy):
        out = np.empty_like(xy)
        out[..., 0] = self.u
        out[..., 1] = self.v
        return out


@dataclass(frozen=True)
class Rotation(VectorField):
    """Rigid rotation at angular speed ``omega`` (counter-clockwise for omega > 0)."""

    omega: float
    center: tuple[float, float] = (0.0, 0.0)
    name = "rotation"
    divergence_free = True

    def __call__(self, t, xy):
        out = np.empty_like(xy)
        out[..., 0] = -self.omega * (xy[..., 1] - self.center[1])
        out[..., 1] = self.omega * (xy[..., 0] - self.center[0])
        return out


@dataclass(frozen=True)
class Shear(VectorField):
    """Plane Couette shear, F(x, y) = (k y, 0)."""

    k: float
    name = "shear"
    divergence_free = True

    def __call__(self, t, xy):
        out = np.zeros_like(xy)
        out[..., 0] = self.k * xy[..., 1]
        return out


@dataclass(frozen=True)
class DoubleGyre(VectorField):
    A: float = 0.1
    eps: float = 0.25
    omega: float = 2.0 * math.pi / 10.0
    name = "double_gyre"
    divergence_free = True

    def __call__(self, t, xy):
        x, y = xy[..., 0], xy[..., 1]
        a = self.eps * math.sin(self.omega * t)
        b = 1.0 - 2.0 * a
        f = a * x * x + b * x
        dfdx = 2.0 * a * x + b
        out = np.empty_like(xy)
        out[..., 0] = -math.pi * self.A * np.sin(math.pi * f) * np.cos(math.pi * y)
        out[..., 1] = math.pi * self.A * np.cos(math.pi * f) * np.sin(math.pi * y) * dfdx
        return out


@dataclass(frozen=True)
class Linear(VectorField):
    """F(x) = M x; the flow map has det J = exp(trace(M) (t - s))."""

    matrix: tuple[tuple[float, float], tuple[float, float]]
    name = "linear"

    def __call__(self, t, xy):
        m = np.asarray(self.matrix, dtype=float)
        return xy @ m.T

    @property
    def trace(self) -> float:
        return float(self.matrix[0][0] + self.matrix[1][1])


def make_field(name: str, **params) -> VectorField:
    """Build a field by name: uniform, rotation, shear, double_gyre, linear."""
    name = name.replace("-", "_")
    if name == "uniform":
        return Uniform(float(params.get("u", 0.0)), float(params.get("v", 0.0)))
    if name == "rotation":
        return Rotation(float(params["omega"]), tuple(params.get("center", (0.0, 0.0))))
    if name == "shear":
        return Shear(float(params["k"]))
    if name == "double_gyre":
        kw = {k: float(params[k]) for k in ("A", "eps", "omega") if params.get(k) is not None}
        return DoubleGyre(**kw)
    if name == "linear":
        return Linear(params["matrix"])
    raise ValueError(f"unknown vector field {name!r}")


def _rk4_run(F, s: float, t: float, x: np.ndarray, h: float):
    """Integrate from s to t with equal steps of size at most h."""
    if h <= 0:
        raise ValueError("step h must be positive")
    span = t - s
    n = math.ceil(abs(span) / h - 1e-12) if span else 0
    if n > MAX_STEPS:
        raise ValueError(f"|t - s| / h = {abs(span) / h:.3g} exceeds {MAX_STEPS}")
    y = np.array(x, dtype=float, copy=True)
    if n == 0:
        return y
    step = span / n
    comp = np.zeros_like(y)
    for k in range(n):
        tk = s + k * step
        k1 = F(tk, y)
        k2 = F(tk + step / 2, y + (step / 2) * k1)
        k3 = F(tk + step / 2, y + (step / 2) * k2)
        k4 = F(tk + step, y + step * k3)
        inc = step * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0) - comp
        new = y + inc
        comp = (new - y) - inc
        y = new
        if not np.abs(y).max() <= BLOWUP_NORM:  # also catches NaN
            raise BlowUp(f"state norm exceeded {BLOWUP_NORM:g} at t = {tk + step}")
    return y


def integrate_flow(F: VectorField, s: float, t: float, x, h: float) -> np.ndarray:
    """
    Flow map Phi(t, s, x): solve du/dt = F(t, u), u(s) = x, up to time t.

    ``x`` may be a single point (2,) or a batch (..., 2). Backward
    integration (t < s) uses negative steps.
    """
    return _rk4_run(F, float(s), float(t), np.asarray(x, dtype=float), float(h))


def integrate_path(F: VectorField, s: float, times: Sequence[float], x, h: float) -> np.ndarray:
    """Positions at each of ``times`` (monotone away from ``s``), shape (len(times), ...)."""
    cur_t = float(s)
    cur = np.asarray(x, dtype=float)
    out = []
    for t in times:
        cur = _rk4_run(F, cur_t, float(t), cur, h)
        cur_t = float(t)
        out.append(cur)
    return np.array(out)


def flow_semigroup_residual(F: VectorField, s: float, t_mid: float, t: float, x, h: float) -> float:
    """|| Phi(t, s, x) - Phi(t, t', Phi(t', s, x)) ||."""
    direct = integrate_flow(F, s, t, x, h)
    two_step = integrate_flow(F, t_mid, t, integrate_flow(F, s, t_mid, x, h), h)
    return float(np.max(np.linalg.norm(direct - two_step, axis=-1)))


def flow_inverse_residual(F: VectorField, s: float, t: float, x, h: float) -> float:
    """|| Phi(s, t, Phi(t, s, x)) - x ||."""
    x = np.asarray(x, dtype=float)
    back = integrate_flow(F, t, s, integrate_flow(F, s, t, x, h), h)
    return float(np.max(np.linalg.norm(back - x, axis=-1)))


def _fd_stencil(x: np.ndarray, fd_eps: float) -> np.ndarray:
    d = x.shape[-1]
    offs = np.zeros((2 * d, d))
    for k in range(d):
        offs[2 * k, k] = fd_eps
        offs[2 * k + 1, k] = -fd_eps
    return x[..., None, :] + offs


def _det_from_stencil(phi: np.ndarray, fd_eps: float) -> np.ndarray:
    d = phi.shape[-1]
    cols = [(phi[..., 2 * k, :] - phi[..., 2 * k + 1, :]) / (2.0 * fd_eps) for k in range(d)]
    jac = np.stack(cols, axis=-1)
    return np.linalg.det(jac)


def jacobian_det(F: VectorField, s: float, t: float, x, h: float, fd_eps: float = 1e-5):
    """
    Determinant of the Jacobian of x -> Phi(t, s, x), by central finite
    differences of the flow map.
    """
    if fd_eps <= 0:
        raise ValueError("fd_eps must be positive")
    x = np.asarray(x, dtype=float)
    phi = integrate_flow(F, s, t, _fd_stencil(x, fd_eps), h)
    det = _det_from_stencil(phi, fd_eps)
    return float(det) if np.ndim(det) == 0 else det


def generate_corpus(
    F: VectorField,
    arrival_points,
    arrival_times: Sequence[float],
    delta_seconds: float,
    h: float,
    fix_interval: float,
    anchor: tuple[float, float] = (0.0, 0.0),
    deg_per_unit: float = 1.0,
    receptors: Sequence[str | None] | None = None,
    altitude: float | Callable[[np.ndarray], np.ndarray] = 500.0,
    with_jacobian: bool = False,
    fd_eps: float = 1e-5,
    id_prefix: str = "sim",
) -> TrajectoryCorpus:
    """
    Trajectory corpus of the flow ``F`` sampled at (arrival point, time) pairs.

    For each arrival point b_l (planar coordinates) and time s_k, fixes
    Phi(v, s_k, b_l) are recorded every ``fix_interval`` seconds from s_k to
    s_k + delta. Planar coordinates are written as lon-lat offsets
    ``anchor + deg_per_unit * (x, y)``. Segments are ordered by (l, k).

    Parameters
    ----------
    altitude : float or callable
        Constant altitude in m, or a function of the signed time offset
        ``v - s_k`` (array) returning altitudes.
    with_jacobian : bool
        Also record det J of Phi(v, s_k, .) at each fix as covariate
        ``jacdet``.
    """
    pts = np.atleast_2d(np.asarray(arrival_points, dtype=float))
    times = [float(t) for t in arrival_times]
    if len(times) == 0 or len(pts) == 0 or pts.shape[1] == 0:
        raise EmptyCorpus("no arrival times or arrival points")
    if delta_seconds == 0:
        raise ValueError("delta must be non-zero")
    if fix_interval <= 0:
        raise ValueError("fix_interval must be positive")
    if receptors is not None and len(receptors) != len(pts):
        raise ValueError("receptors must match arrival points")
    n_full = int(math.floor(abs(delta_seconds) / fix_interval + 1e-9))
    offsets = [j * fix_interval for j in range(n_full + 1)]
    if abs(abs(delta_seconds) - offsets[-1]) > 1e-9 * fix_interval:
        offsets.append(abs(delta_seconds))
    sign = 1.0 if delta_seconds > 0 else -1.0
    offsets = np.array(offsets) * sign

    per_time = []
    for s in times:
        path_t = s + offsets
        if with_jacobian:
            stencil = _fd_stencil(pts, fd_eps)
            batch = np.concatenate([pts[:, None, :], stencil], axis=1)
            path = integrate_path(F, s, path_t, batch, h)
            xy = path[:, :, 0, :]
            det = _det_from_stencil(path[:, :, 1:, :], fd_eps)
        else:
            xy = integrate_path(F, s, path_t, pts, h)
            det = None
        per_time.append((s, path_t, xy, det))

    order = slice(None, None, -1) if sign < 0 else slice(None)
    segments = []
    wl = len(str(len(pts) - 1))
    wk = len(str(len(times) - 1))
    for l in range(len(pts)):
        for k, (s, path_t, xy, det) in enumerate(per_time):
            lon = anchor[0] + deg_per_unit * xy[:, l, 0]
            lat = anchor[1] + deg_per_unit * xy[:, l, 1]
            if callable(altitude):
                alt = np.asarray(altitude(offsets), dtype=float)
            else:
                alt = np.full(len(offsets), float(altitude))
            covs = {"jacdet": det[:, l][order]} if det is not None else {}
            segments.append(TrajectorySegment(
                traj_id=f"{id_prefix}-{l:0{wl}d}-{k:0{wk}d}",
                sample_time=s,
                times=path_t[order], lon=lon[order], lat=lat[order], alt=alt[order],
                receptor_region=receptors[l] if receptors is not None else None,
                covariates=covs,
            ))
    return TrajectoryCorpus.from_segments(segments, float(delta_seconds), float(fix_interval))
