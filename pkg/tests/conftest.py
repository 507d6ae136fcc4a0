"""Shared fixtures and oracle helpers.

Finite differences are the independent reference for every analytic
derivative in the package: central stencils with h=1e-5 on function
values, relative error measured against max(1, |value|) so tiny values
do not inflate the ratio.
"""

import numpy as np
import pytest

from trajfield import (
    ChunkRecord,
    ModulationCoeffs,
    SirenMeta,
    init_siren,
    identity_mods,
    modulate,
)
from trajfield.data import make_context
from trajfield.model import init_model

FD_H = 1e-5


def rel_err(approx, exact):
    """Max elementwise |approx - exact| / max(1, |exact|)."""
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    denom = np.maximum(1.0, np.abs(exact))
    return float(np.max(np.abs(approx - exact) / denom))


def fd_central(f, x, h=FD_H):
    """Central first difference of a vector-valued function of a scalar."""
    return (f(x + h) - f(x - h)) / (2.0 * h)


def random_mods(meta, rng, scale=0.3):
    gamma = tuple(scale * rng.standard_normal(W.shape) for W, _ in meta.layers)
    beta = tuple(scale * rng.standard_normal(b.shape) for _, b in meta.layers)
    return ModulationCoeffs(gamma=gamma, beta=beta)


def random_field(L, width, omega0, seed, D=2, modulated=True, activation="sine"):
    meta = init_siren(L, [width] * L, D, omega0=omega0, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    mods = random_mods(meta, rng) if modulated else identity_mods(meta)
    return modulate(meta, mods, activation=activation)


def one_layer_field(w, b, w_out, b_out, omega0=1.0, gamma=0.0, beta=0.0):
    """Single hidden unit, single output: A(tau) = w_out*sin(w0*(w*(1+g)*tau + b+beta)) + b_out."""
    meta = SirenMeta(
        layers=((np.array([[float(w)]]), np.array([float(b)])),),
        w_out=np.array([[float(w_out)]]),
        b_out=np.array([float(b_out)]),
        omega0=float(omega0),
    )
    mods = ModulationCoeffs(
        gamma=(np.array([[float(gamma)]]),),
        beta=(np.array([float(beta)]),),
    )
    return modulate(meta, mods)


def chunk_from_arrays(positions, T=2.0, velocities=None, task="minjerk", id="chunk"):
    positions = np.asarray(positions, dtype=np.float64)
    ctx = make_context(task, positions[0], positions[-1])
    return ChunkRecord(
        id=id,
        duration_T=float(T),
        positions=positions,
        velocities=None if velocities is None else np.asarray(velocities, dtype=np.float64),
        context=ctx,
    )


@pytest.fixture
def tiny_model():
    """168-parameter model, small enough for exhaustive FD gradient checks."""
    return init_model(
        L=2, widths=(4, 4), D=2, omega0=1.0, G=2, d=3,
        context_dim=7, num_chunks=1, mode="auto_decoder", seed=3,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
