"""Second-order plant plus the two control laws under comparison.

The plant is a decoupled per-DoF double integrator with viscous damping,
advanced by semi-implicit Euler. The impedance law tracks the field's
analytic position and velocity as a time-varying equilibrium; the stiff
position law is the same expression with the velocity reference forced to
zero and the position reference held at the latest discrete waypoint, which
is what produces the micro-step jitter the metrics below quantify.

Controller ticks run at a fixed rate; the plant step may subdivide them, in
which case the command is held (zero-order hold) between ticks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .baselines import WaypointChunk
from .errors import ConfigError, DivergenceError
from .field import ModulatedField, eval_grid


@dataclass(frozen=True)
class Plant:
    mass: np.ndarray  # (D,)
    damping: np.ndarray  # (D,)
    position: np.ndarray  # (D,)
    velocity: np.ndarray  # (D,)
    dt: float

    def __post_init__(self):
        for name in ("mass", "damping", "position", "velocity"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64)))
        D = self.mass.shape[0]
        for name in ("damping", "position", "velocity"):
            if getattr(self, name).shape != (D,):
                raise ConfigError("config.bad_value:plant", f"{name} shape mismatch")
        if np.any(self.mass <= 0):
            raise ConfigError("config.bad_value:mass", "mass must be positive")
        if np.any(self.damping < 0):
            raise ConfigError("config.bad_value:damping")
        if not self.dt > 0:
            raise ConfigError("config.bad_value:dt")
        if not (np.isfinite(self.position).all() and np.isfinite(self.velocity).all()):
            raise ConfigError("config.bad_value:plant", "non-finite state")

    @property
    def dof(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True)
class ImpedanceGains:
    Kp: np.ndarray  # (D,)
    Kd: np.ndarray  # (D,)

    def __post_init__(self):
        object.__setattr__(self, "Kp", np.atleast_1d(np.asarray(self.Kp, dtype=np.float64)))
        object.__setattr__(self, "Kd", np.atleast_1d(np.asarray(self.Kd, dtype=np.float64)))
        if self.Kp.shape != self.Kd.shape:
            raise ConfigError("config.bad_value:gains", "Kp/Kd shape mismatch")
        if np.any(self.Kp < 0) or np.any(self.Kd < 0):
            raise ConfigError("config.bad_value:gains", "gains must be non-negative")


def critically_damped(Kp, mass) -> ImpedanceGains:
    Kp = np.atleast_1d(np.asarray(Kp, dtype=np.float64))
    mass = np.atleast_1d(np.asarray(mass, dtype=np.float64))
    return ImpedanceGains(Kp=Kp, Kd=2.0 * np.sqrt(Kp * mass))


@dataclass(frozen=True)
class ControlTrace:
    time: np.ndarray  # (N,)
    position: np.ndarray  # (N, D)
    velocity: np.ndarray  # (N, D)
    ref_position: np.ndarray  # (N, D)
    ref_velocity: np.ndarray  # (N, D)
    command: np.ndarray  # (N, D)
    controller: str

    def __post_init__(self):
        N = self.time.shape[0]
        for name in ("position", "velocity", "ref_position", "ref_velocity", "command"):
            if getattr(self, name).shape[0] != N:
                raise ConfigError("config.bad_value:trace", f"{name} length mismatch")

    @property
    def D(self) -> int:
        return self.position.shape[1]


def step_plant(p: Plant, u: np.ndarray) -> Plant:
    """One semi-implicit Euler step: velocity first, then position with the
    updated velocity. Dissipative for u = 0 and damping > 0."""
    u = np.asarray(u, dtype=np.float64)
    v = p.velocity + p.dt * (u - p.damping * p.velocity) / p.mass
    x = p.position + p.dt * v
    return replace(p, position=x, velocity=v)


def impedance_command(gains: ImpedanceGains, ref_pos, ref_vel, pos, vel) -> np.ndarray:
    return gains.Kp * (ref_pos - pos) + gains.Kd * (ref_vel - vel)


class _Rollout:
    """Shared stepping loop; the two entry points differ only in how the
    reference is produced at each controller tick."""

    def __init__(self, plant: Plant, gains: ImpedanceGains, steps: int, controller_hz: float, tag: str):
        if steps < 1:
            raise ConfigError("config.bad_value:steps")
        if controller_hz <= 0:
            raise ConfigError("config.bad_value:controller_hz")
        self.substeps = max(1, int(round(1.0 / (controller_hz * plant.dt))))
        self.plant = plant
        self.gains = gains
        self.steps = steps
        self.tag = tag
        D = plant.dof
        self.rows = {k: np.empty((steps, D)) for k in
                     ("position", "velocity", "ref_position", "ref_velocity", "command")}
        self.time = np.arange(steps) * plant.dt

    def run(self, reference_at) -> ControlTrace:
        p = self.plant
        u = np.zeros(p.dof)
        ref_pos = p.position
        ref_vel = np.zeros(p.dof)
        for k in range(self.steps):
            if k % self.substeps == 0:
                ref_pos, ref_vel = reference_at(k * p.dt)
                u = impedance_command(self.gains, ref_pos, ref_vel, p.position, p.velocity)
                if not np.isfinite(u).all():
                    raise DivergenceError(
                        f"sim.non_finite_command:step_{k}",
                        trace=self._trace_prefix(k),
                    )
            self.rows["position"][k] = p.position
            self.rows["velocity"][k] = p.velocity
            self.rows["ref_position"][k] = ref_pos
            self.rows["ref_velocity"][k] = ref_vel
            self.rows["command"][k] = u
            p = step_plant(p, u)
        self.final_plant = p
        return ControlTrace(time=self.time, controller=self.tag, **self.rows)

    def _trace_prefix(self, k: int) -> ControlTrace:
        return ControlTrace(
            time=self.time[:k],
            controller=self.tag,
            **{name: arr[:k] for name, arr in self.rows.items()},
        )


def _field_reference(field: ModulatedField, T: float, offset=None):
    scale = 2.0 / T

    def reference_at(t: float):
        tau = min(-1.0 + scale * t, 1.0)
        raw = eval_grid(field, np.array([tau]), 1)
        pos = raw[0][0]
        vel = raw[1][0] * scale
        if offset is not None:
            pos = pos + offset
        return pos, vel

    return reference_at


def run_impedance(plant: Plant, field: ModulatedField, gains: ImpedanceGains, T: float,
                  steps: int, controller_hz: float = 50.0) -> ControlTrace:
    """Track the field's analytic position/velocity over one chunk."""
    if steps * plant.dt > T * (1.0 + 1e-12):
        raise ConfigError("config.bad_value:steps", "rollout longer than the chunk")
    roll = _Rollout(plant, gains, steps, controller_hz, "impedance")
    return roll.run(_field_reference(field, T))


def run_position_ctrl(plant: Plant, chunk: WaypointChunk, gains: ImpedanceGains,
                      steps: int, controller_hz: float = 50.0) -> ControlTrace:
    """Stiff position control against a staircase of discrete waypoints.

    The velocity reference is identically zero; the position reference jumps
    to the latest waypoint whose timestamp has passed.
    """
    if steps * plant.dt > chunk.duration_T * (1.0 + 1e-12):
        raise ConfigError("config.bad_value:steps", "rollout longer than the chunk")
    zero_vel = np.zeros(chunk.D)
    wp_dt = chunk.dt

    def reference_at(t: float):
        idx = min(int(t / wp_dt), chunk.H - 1)
        return chunk.points[idx], zero_vel

    roll = _Rollout(plant, gains, steps, controller_hz, "position")
    return roll.run(reference_at)


def run_chunked_impedance(plant: Plant, fields: list, gains: ImpedanceGains, T: float,
                          steps_per_chunk: int, controller_hz: float = 50.0) -> ControlTrace:
    """Chain several anchored chunk fields; each chunk's reference is offset
    by the accumulated end position of the previous chunks."""
    offset = np.zeros(plant.dof)
    traces = []
    p = plant
    for field in fields:
        roll = _Rollout(p, gains, steps_per_chunk, controller_hz, "impedance")
        trace = roll.run(_field_reference(field, T, offset=offset))
        traces.append(trace)
        end = eval_grid(field, np.array([1.0]), 0)[0][0]
        offset = offset + end
        p = roll.final_plant
    t0 = 0.0
    times = []
    for tr in traces:
        times.append(tr.time + t0)
        t0 += steps_per_chunk * plant.dt
    return ControlTrace(
        time=np.concatenate(times),
        position=np.concatenate([tr.position for tr in traces]),
        velocity=np.concatenate([tr.velocity for tr in traces]),
        ref_position=np.concatenate([tr.ref_position for tr in traces]),
        ref_velocity=np.concatenate([tr.ref_velocity for tr in traces]),
        command=np.concatenate([tr.command for tr in traces]),
        controller="impedance",
    )


def jitter_metrics(trace: ControlTrace) -> dict:
    """Jitter and tracking summary of one rollout.

    zero-crossing rate: velocity sign changes per second, averaged over DoF;
    jerk RMS: second difference of velocity over dt^2; high-frequency energy
    ratio: spectral velocity energy above half the Nyquist frequency.
    """
    N = trace.time.shape[0]
    if N < 8:
        raise ConfigError("config.bad_value:trace", "need at least 8 samples")
    duration = float(trace.time[-1] - trace.time[0])
    dt = float(trace.time[1] - trace.time[0])
    v = trace.velocity

    crossings = np.sum(v[:-1] * v[1:] < 0, axis=0)
    zc_rate = float(np.mean(crossings) / duration)

    jerk = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dt**2
    jerk_rms = float(np.sqrt(np.mean(jerk**2)))

    tracking_rmse = float(np.sqrt(np.mean((trace.position - trace.ref_position) ** 2)))

    spec = np.abs(np.fft.rfft(v, axis=0)) ** 2
    freqs = np.fft.rfftfreq(N, dt)
    total = np.sum(spec, axis=0)
    hf = np.sum(spec[freqs > freqs[-1] / 2.0], axis=0)
    with np.errstate(invalid="ignore"):
        ratio = np.where(total > 0, hf / np.maximum(total, 1e-300), 0.0)
    hf_energy_ratio = float(np.mean(ratio))

    return {
        "vel_zero_crossing_rate": zc_rate,
        "jerk_rms": jerk_rms,
        "tracking_rmse": tracking_rmse,
        "hf_energy_ratio": hf_energy_ratio,
    }


TRACE_COLUMN_GROUPS = ("pos", "vel", "ref_pos", "ref_vel", "u")


def trace_columns(D: int) -> list:
    cols = ["time"]
    for group in TRACE_COLUMN_GROUPS:
        cols.extend(f"{group}_{j}" for j in range(D))
    return cols


def write_trace_csv(path, trace: ControlTrace) -> None:
    """One row per plant step; column layout given by trace_columns."""
    blocks = (trace.position, trace.velocity, trace.ref_position, trace.ref_velocity, trace.command)
    with open(path, "w") as f:
        f.write(",".join(trace_columns(trace.D)) + "\n")
        for k in range(trace.time.shape[0]):
            vals = [trace.time[k]]
            for b in blocks:
                vals.extend(b[k])
            f.write(",".join(repr(float(x)) for x in vals) + "\n")
