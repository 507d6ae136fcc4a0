"""Continuous-time action chunks as modulated sinusoidal fields.

A chunk is represented as a smooth function of normalized time with exact
analytic derivatives, conditioned on per-instance latents that deform a
shared prior network. Discrete-waypoint and spline baselines plus a small
simulated control loop live alongside for comparison.
"""

from .baselines import BsplineChunk, WaypointChunk, fd_acceleration, fd_velocity, fit_bspline, quantize
from .data import ChunkRecord, anchor_chunk, gen_minjerk, gen_pickplace, gen_sines, read_dataset, unanchor_chunk, write_dataset
from .errors import ConfigError, DataError, DivergenceError, StructureError, TrajfieldError
from .field import (
    KinematicProfile,
    ModulatedField,
    ModulationCoeffs,
    SirenMeta,
    eval_acceleration,
    eval_jerk,
    eval_position,
    eval_velocity,
    identity_mods,
    init_siren,
    modulate,
    sample_chunk,
    uniform_grid,
)
from .hypermod import ContextEncoder, LatentBlock, ProjectionHeads, allocate_tokens, encode_context, init_encoder, init_heads, project_modulation
from .kernels import BACKEND
from .model import FieldModel, init_model, realize_field
from .simctl import ControlTrace, ImpedanceGains, Plant, critically_damped, jitter_metrics, run_impedance, run_position_ctrl, step_plant
from .train import LossWeights, TrainConfig, fit, grad_params, loss_acc, loss_jerk, loss_pos, loss_vel, total_loss

__version__ = "0.1.0"
