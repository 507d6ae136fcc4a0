"""Discrete-waypoint and spline chunk representations.

These exist to be compared against: uniform per-dimension quantization, the
finite-difference stencils a consumer of waypoints would use to recover
velocity, linear resampling, and a clamped cubic B-spline fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def diff1(x: np.ndarray, dt: float) -> np.ndarray:
    """Second-order first derivative on a uniform grid.

    Central stencil inside, one-sided three-point stencils at the ends.
    Exact on affine data.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 3:
        raise ConfigError("config.bad_value:H", "need at least 3 samples to differentiate")
    out = np.empty_like(x)
    out[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt)
    out[-1] = (3.0 * x[-1] - 4.0 * x[-2] + x[-3]) / (2.0 * dt)
    return out


def diff2(x: np.ndarray, dt: float) -> np.ndarray:
    """Second derivative: central three-point stencil, one-sided four-point
    at the ends (falls back to the adjacent interior value when H = 3)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 3:
        raise ConfigError("config.bad_value:H", "need at least 3 samples to differentiate")
    out = np.empty_like(x)
    out[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) / dt**2
    if x.shape[0] >= 4:
        out[0] = (2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]) / dt**2
        out[-1] = (2.0 * x[-1] - 5.0 * x[-2] + 4.0 * x[-3] - x[-4]) / dt**2
    else:
        out[0] = out[1]
        out[-1] = out[1]
    return out


@dataclass(frozen=True)
class WaypointChunk:
    """H discrete points over a fixed duration."""

    points: np.ndarray  # (H, D)
    duration_T: float
    quantized: bool = False
    bins: int = 256

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ConfigError("config.bad_value:points", "need an (H>=2, D) matrix")
        object.__setattr__(self, "points", pts)
        if not self.duration_T > 0:
            raise ConfigError("config.bad_value:T")

    @property
    def H(self) -> int:
        return self.points.shape[0]

    @property
    def D(self) -> int:
        return self.points.shape[1]

    @property
    def dt(self) -> float:
        return self.duration_T / (self.H - 1)


def quantize(chunk: WaypointChunk, bins: int = 256) -> WaypointChunk:
    """Uniform per-dimension quantization over the chunk's own value range.

    Levels include both range endpoints; a value exactly between two levels
    snaps to the lower index. Constant dimensions pass through untouched.
    Max reconstruction error is range / (2 * (bins - 1)).
    """
    if bins < 2:
        raise ConfigError("config.bad_value:bins", "need at least 2")
    pts = chunk.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    rng = hi - lo
    out = pts.copy()
    for j in range(pts.shape[1]):
        if rng[j] == 0.0:
            continue
        t = (pts[:, j] - lo[j]) / rng[j] * (bins - 1)
        idx = np.ceil(t - 0.5)
        out[:, j] = lo[j] + (idx / (bins - 1)) * rng[j]
    return WaypointChunk(points=out, duration_T=chunk.duration_T, quantized=True, bins=bins)


def fd_velocity(chunk: WaypointChunk) -> np.ndarray:
    """Per-step numerical velocity in physical units."""
    return diff1(chunk.points, chunk.dt)


def fd_acceleration(chunk: WaypointChunk) -> np.ndarray:
    return diff2(chunk.points, chunk.dt)


def interp_linear(chunk: WaypointChunk, K_out: int) -> WaypointChunk:
    """Resample onto a uniform K_out grid by per-dimension linear
    interpolation. Output never leaves the convex hull of the inputs."""
    if K_out < 2:
        raise ConfigError("config.bad_value:K", "need K >= 2")
    t_old = np.arange(chunk.H) / (chunk.H - 1)
    t_new = np.arange(K_out) / (K_out - 1)
    out = np.empty((K_out, chunk.D))
    for j in range(chunk.D):
        out[:, j] = np.interp(t_new, t_old, chunk.points[:, j])
    return WaypointChunk(points=out, duration_T=chunk.duration_T)


# ---------------------------------------------------------------------------
# Clamped uniform B-splines.


def clamped_knots(P: int, degree: int) -> np.ndarray:
    """(degree+1)-fold end knots with uniformly spaced interior knots on [0, 1]."""
    if P < degree + 1:
        raise ConfigError("config.bad_value:P", "need P >= degree + 1 control points")
    interior = np.arange(1, P - degree) / (P - degree)
    return np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])


@dataclass(frozen=True)
class BsplineChunk:
    control_points: np.ndarray  # (P, D)
    degree: int = 3
    knots: np.ndarray = None

    def __post_init__(self):
        cp = np.ascontiguousarray(self.control_points, dtype=np.float64)
        if cp.ndim != 2:
            raise ConfigError("config.bad_value:control_points")
        object.__setattr__(self, "control_points", cp)
        if cp.shape[0] < self.degree + 1:
            raise ConfigError("config.bad_value:P", "need P >= degree + 1 control points")
        knots = self.knots if self.knots is not None else clamped_knots(cp.shape[0], self.degree)
        object.__setattr__(self, "knots", np.asarray(knots, dtype=np.float64))
        if self.knots.shape[0] != cp.shape[0] + self.degree + 1:
            raise ConfigError("config.bad_value:knots", "knot count must be P + degree + 1")

    @property
    def P(self) -> int:
        return self.control_points.shape[0]

    @property
    def D(self) -> int:
        return self.control_points.shape[1]


def _find_span(knots: np.ndarray, degree: int, P: int, t: float) -> int:
    if t >= knots[P]:
        return P - 1
    if t <= knots[degree]:
        return degree
    return int(np.searchsorted(knots, t, side="right") - 1)


def _basis_row(knots: np.ndarray, degree: int, P: int, t: float) -> np.ndarray:
    """All P basis function values at parameter t (Cox-de Boor)."""
    span = _find_span(knots, degree, P, t)
    N = np.zeros(degree + 1)
    N[0] = 1.0
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    for j in range(1, degree + 1):
        left[j] = t - knots[span + 1 - j]
        right[j] = knots[span + j] - t
        saved = 0.0
        for r in range(j):
            denom = right[r + 1] + left[j - r]
            temp = N[r] / denom
            N[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        N[j] = saved
    row = np.zeros(P)
    row[span - degree : span + 1] = N
    return row


def bspline_eval(b: BsplineChunk, tau: float) -> np.ndarray:
    """Curve point at normalized time tau in [-1, 1]."""
    t = (float(tau) + 1.0) / 2.0
    if not 0.0 <= t <= 1.0:
        raise ConfigError("config.bad_value:tau", "tau outside [-1, 1]")
    row = _basis_row(b.knots, b.degree, b.P, t)
    return row @ b.control_points


def bspline_derivative(b: BsplineChunk) -> BsplineChunk:
    """Derivative curve (degree - 1) with respect to the unit parameter."""
    p = b.degree
    if p < 1:
        raise ConfigError("config.bad_value:degree", "cannot differentiate degree 0")
    cp = b.control_points
    denom = b.knots[1 + p : b.P + p] - b.knots[1 : b.P]
    Q = p * (cp[1:] - cp[:-1]) / denom[:, None]
    return BsplineChunk(control_points=Q, degree=p - 1, knots=b.knots[1:-1])


def fit_bspline(chunk: WaypointChunk, P: int, degree: int = 3):
    """Least-squares control points on the chunk's uniform grid.

    Returns (BsplineChunk, rms_residual). Asking for more control points
    than samples is underdetermined and rejected.
    """
    if P > chunk.H:
        raise ConfigError("config.bad_value:P", "more control points than samples")
    knots = clamped_knots(P, degree)
    t = np.arange(chunk.H) / (chunk.H - 1)
    B = np.stack([_basis_row(knots, degree, P, ti) for ti in t])
    cp, _, _, _ = np.linalg.lstsq(B, chunk.points, rcond=None)
    residual = float(np.sqrt(np.mean((B @ cp - chunk.points) ** 2)))
    return BsplineChunk(control_points=cp, degree=degree, knots=knots), residual
