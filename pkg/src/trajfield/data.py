"""Synthetic chunk generation, start-relative anchoring, dataset I/O.

All generators store closed-form velocities next to the positions so tests
can treat them as derivative oracles. The context feature vector follows a
fixed schema: [task one-hot (3) | start configuration | end configuration].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError

SCHEMA_VERSION = 1
TASKS = ("minjerk", "sines", "pickplace")


def task_onehot(task: str) -> np.ndarray:
    if task not in TASKS:
        raise ConfigError("config.bad_value:task", task)
    v = np.zeros(len(TASKS))
    v[TASKS.index(task)] = 1.0
    return v


def make_context(task: str, x0: np.ndarray, xf: np.ndarray) -> np.ndarray:
    return np.concatenate([task_onehot(task), np.asarray(x0, float).ravel(), np.asarray(xf, float).ravel()])


@dataclass(frozen=True)
class ChunkRecord:
    """One training example: H waypoints of a D-dof trajectory over T seconds."""

    id: str
    duration_T: float
    positions: np.ndarray  # (H, D)
    context: np.ndarray  # (C,)
    velocities: Optional[np.ndarray] = None  # (H, D), physical units
    anchored: bool = False
    offset: Optional[np.ndarray] = None  # (D,), present iff anchored

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[0] < 2:
            raise DataError("data.bad_record:" + self.id, "positions must be (H>=2, D)")
        object.__setattr__(self, "positions", pos)
        if self.velocities is not None:
            vel = np.ascontiguousarray(self.velocities, dtype=np.float64)
            if vel.shape != pos.shape:
                raise DataError("data.bad_record:" + self.id, "velocity shape mismatch")
            object.__setattr__(self, "velocities", vel)
        ctx = np.ascontiguousarray(self.context, dtype=np.float64)
        if ctx.ndim != 1:
            raise DataError("data.bad_record:" + self.id, "context must be 1-d")
        object.__setattr__(self, "context", ctx)
        if not self.duration_T > 0:
            raise DataError("data.bad_record:" + self.id, "duration must be positive")
        if self.anchored:
            if self.offset is None:
                raise DataError("data.bad_record:" + self.id, "anchored record lacks offset")
            off = np.ascontiguousarray(self.offset, dtype=np.float64)
            if off.shape != (pos.shape[1],):
                raise DataError("data.bad_record:" + self.id, "offset shape mismatch")
            object.__setattr__(self, "offset", off)
            if not np.all(pos[0] == 0.0):
                raise DataError("data.bad_record:" + self.id, "anchored but positions[0] != 0")
        elif self.offset is not None:
            raise DataError("data.bad_record:" + self.id, "offset on unanchored record")

    @property
    def H(self) -> int:
        return self.positions.shape[0]

    @property
    def D(self) -> int:
        return self.positions.shape[1]


def _time_grid(T: float, H: int) -> np.ndarray:
    if not T > 0:
        raise ConfigError("config.bad_value:T", "duration must be positive")
    if H < 2:
        raise ConfigError("config.bad_value:H", "need at least 2 samples")
    return np.arange(H) * (T / (H - 1))


def _minjerk_pos(s):
    return 10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5


def _minjerk_vel(s):
    return 30.0 * s**2 - 60.0 * s**3 + 30.0 * s**4


def gen_minjerk(x0, xf, T: float, H: int, id: str = "minjerk") -> ChunkRecord:
    """Minimum-jerk point-to-point profile; rest-to-rest, closed-form velocity."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    xf = np.atleast_1d(np.asarray(xf, dtype=np.float64))
    if x0.shape != xf.shape or x0.ndim != 1:
        raise ConfigError("config.bad_value:endpoints", "x0/xf must be equal-length vectors")
    t = _time_grid(T, H)
    s = t / T
    delta = xf - x0
    pos = x0[None, :] + np.outer(_minjerk_pos(s), delta)
    vel = np.outer(_minjerk_vel(s) / T, delta)
    return ChunkRecord(
        id=id, duration_T=float(T), positions=pos, velocities=vel,
        context=make_context("minjerk", x0, xf),
    )


def gen_sines(amplitudes, frequencies, phases, T: float, H: int, id: str = "sines") -> ChunkRecord:
    """Sum of M sinusoids per dof: x_j(t) = sum_m A[m,j] sin(2 pi f[m,j] t + phi[m,j])."""
    A = np.atleast_2d(np.asarray(amplitudes, dtype=np.float64))
    F = np.atleast_2d(np.asarray(frequencies, dtype=np.float64))
    P = np.atleast_2d(np.asarray(phases, dtype=np.float64))
    if not (A.shape == F.shape == P.shape):
        raise ConfigError("config.bad_value:sines", "amplitude/frequency/phase shapes differ")
    t = _time_grid(T, H)
    arg = 2.0 * np.pi * F[None, :, :] * t[:, None, None] + P[None, :, :]
    pos = np.sum(A[None, :, :] * np.sin(arg), axis=1)
    vel = np.sum(A[None, :, :] * (2.0 * np.pi * F[None, :, :]) * np.cos(arg), axis=1)
    return ChunkRecord(
        id=id, duration_T=float(T), positions=pos, velocities=vel,
        context=make_context("sines", pos[0], pos[-1]),
    )


def gen_pickplace(waypoints, dwell: float, T: float, H: int, id: str = "pickplace") -> ChunkRecord:
    """Piecewise minimum-jerk through waypoints, pausing `dwell` seconds at
    each intermediate waypoint. Mimics a reach/grasp/transfer profile."""
    W = np.atleast_2d(np.asarray(waypoints, dtype=np.float64))
    if W.shape[0] < 2:
        raise ConfigError("config.bad_value:waypoints", "need at least 2 waypoints")
    if dwell < 0:
        raise ConfigError("config.bad_value:dwell", "dwell must be non-negative")
    n_moves = W.shape[0] - 1
    n_dwells = W.shape[0] - 2
    move_time = (T - dwell * n_dwells) / n_moves
    if not move_time > 0:
        raise ConfigError("config.bad_value:dwell", "dwells leave no time to move")

    # Segment table: (t_start, duration, w_from, w_to); dwells are zero-delta moves.
    segs = []
    t0 = 0.0
    for i in range(n_moves):
        segs.append((t0, move_time, W[i], W[i + 1]))
        t0 += move_time
        if i < n_moves - 1 and dwell > 0:
            segs.append((t0, dwell, W[i + 1], W[i + 1]))
            t0 += dwell
    starts = np.array([s[0] for s in segs])

    t = _time_grid(T, H)
    pos = np.empty((H, W.shape[1]))
    vel = np.empty((H, W.shape[1]))
    idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(segs) - 1)
    for k in range(H):
        t_start, dur, wa, wb = segs[idx[k]]
        s = min(max((t[k] - t_start) / dur, 0.0), 1.0)
        delta = wb - wa
        pos[k] = wa + _minjerk_pos(s) * delta
        vel[k] = (_minjerk_vel(s) / dur) * delta
    return ChunkRecord(
        id=id, duration_T=float(T), positions=pos, velocities=vel,
        context=make_context("pickplace", W[0], W[-1]),
    )


def anchor_chunk(c: ChunkRecord) -> ChunkRecord:
    """Subtract the first waypoint from every row; velocities untouched.

    The offset is retained so the transform can be inverted.
    """
    if c.anchored:
        raise DataError("data.already_anchored:" + c.id)
    offset = c.positions[0].copy()
    return replace(c, positions=c.positions - offset, anchored=True, offset=offset)


def unanchor_chunk(c: ChunkRecord) -> ChunkRecord:
    if not c.anchored:
        raise DataError("data.not_anchored:" + c.id)
    restored = c.positions + c.offset
    restored[0] = c.offset  # row 0 is exactly zero, so this is the exact inverse
    return replace(c, positions=restored, anchored=False, offset=None)


# ---------------------------------------------------------------------------
# Dataset I/O: one JSON object per line, full double precision (repr floats).


def _record_to_obj(c: ChunkRecord) -> dict:
    obj = {
        "schema": SCHEMA_VERSION,
        "id": c.id,
        "T": c.duration_T,
        "D": c.D,
        "H": c.H,
        "positions": c.positions.tolist(),
        "context": c.context.tolist(),
        "anchored": c.anchored,
    }
    if c.velocities is not None:
        obj["velocities"] = c.velocities.tolist()
    if c.offset is not None:
        obj["offset"] = c.offset.tolist()
    return obj


def _obj_to_record(obj: dict) -> ChunkRecord:
    if obj.get("schema") != SCHEMA_VERSION:
        raise DataError("data.bad_schema", f"expected schema {SCHEMA_VERSION}")
    rid = obj.get("id", "?")
    try:
        pos = np.asarray(obj["positions"], dtype=np.float64)
        rec = ChunkRecord(
            id=obj["id"],
            duration_T=float(obj["T"]),
            positions=pos,
            context=np.asarray(obj["context"], dtype=np.float64),
            velocities=None if "velocities" not in obj else np.asarray(obj["velocities"], dtype=np.float64),
            anchored=bool(obj.get("anchored", False)),
            offset=None if "offset" not in obj else np.asarray(obj["offset"], dtype=np.float64),
        )
    except KeyError as e:
        raise DataError("data.bad_record:" + str(rid), f"missing key {e}") from e
    if rec.D != int(obj["D"]) or rec.H != int(obj["H"]):
        raise DataError("data.bad_record:" + str(rid), "declared H/D disagree with arrays")
    return rec


def write_dataset(path, records) -> None:
    with open(path, "w") as f:
        for c in records:
            f.write(json.dumps(_record_to_obj(c)) + "\n")


def read_dataset(path) -> list:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError("data.malformed_line:" + str(lineno), str(e)) from e
            out.append(_obj_to_record(obj))
    return out
