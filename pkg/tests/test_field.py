"""Field construction, evaluation, and analytic-derivative consistency."""

import numpy as np
import pytest

from trajfield import (
    ConfigError,
    KinematicProfile,
    ModulationCoeffs,
    SirenMeta,
    StructureError,
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
from trajfield.field import eval_grid
from trajfield.kernels import pycore

from conftest import FD_H, one_layer_field, random_field, random_mods, rel_err


# ---------------------------------------------------------------- construction

def test_init_shapes_and_zero_biases():
    meta = init_siren(3, [64, 64, 64], 7, omega0=30.0, seed=0)
    (W1, b1), (W2, b2), (W3, b3) = meta.layers
    assert W1.shape == (64, 1)
    assert W2.shape == (64, 64)
    assert W3.shape == (64, 64)
    assert meta.w_out.shape == (7, 64)
    assert meta.b_out.shape == (7,)
    for b in (b1, b2, b3, meta.b_out):
        assert np.all(b == 0.0)
    assert meta.L == 3 and meta.widths == [64, 64, 64] and meta.D == 7


def test_init_deterministic_for_seed():
    a = init_siren(2, [8, 8], 3, omega0=30.0, seed=42)
    b = init_siren(2, [8, 8], 3, omega0=30.0, seed=42)
    c = init_siren(2, [8, 8], 3, omega0=30.0, seed=43)
    for (Wa, _), (Wb, _) in zip(a.layers, b.layers):
        assert np.array_equal(Wa, Wb)
    assert np.array_equal(a.w_out, b.w_out)
    assert not np.array_equal(a.layers[0][0], c.layers[0][0])


def test_init_bounds():
    meta = init_siren(3, [64, 64, 64], 7, omega0=30.0, seed=1)
    W1 = meta.layers[0][0]
    W2 = meta.layers[1][0]
    assert np.max(np.abs(W1)) <= 1.0
    hidden_bound = np.sqrt(6.0 / 64.0) / 30.0  # ~0.01021
    assert np.max(np.abs(W2)) <= hidden_bound
    # 4096 uniform draws should come close to the bound
    assert np.max(np.abs(W2)) > 0.9 * hidden_bound
    out_bound = np.sqrt(6.0 / 64.0)
    assert np.max(np.abs(meta.w_out)) <= out_bound


def test_init_rejects_bad_architecture():
    with pytest.raises(ConfigError):
        init_siren(2, [8], 3)
    with pytest.raises(ConfigError):
        init_siren(1, [8], 3, omega0=0.0)
    with pytest.raises(ConfigError):
        init_siren(0, [], 3)


def test_meta_rejects_bad_shapes():
    with pytest.raises(StructureError):
        SirenMeta(
            layers=((np.ones((4, 2)), np.zeros(4)),),  # n_0 must be 1
            w_out=np.ones((2, 4)),
            b_out=np.zeros(2),
            omega0=30.0,
        )
    with pytest.raises(StructureError):
        SirenMeta(
            layers=((np.ones((4, 1)), np.zeros(4)),),
            w_out=np.ones((2, 3)),  # readout fan-in mismatch
            b_out=np.zeros(2),
            omega0=30.0,
        )


# ----------------------------------------------------------------- modulation

def test_identity_modulation_is_bitwise():
    # I2: zero coefficients leave every effective parameter untouched
    meta = init_siren(3, [16, 16, 16], 4, omega0=30.0, seed=5)
    field = modulate(meta, identity_mods(meta))
    for (W, b), We, be in zip(meta.layers, field.weights, field.biases):
        assert np.array_equal(W, We)
        assert np.array_equal(b, be)
    assert np.array_equal(field.w_out, meta.w_out)
    assert np.array_equal(field.b_out, meta.b_out)


def test_unit_gamma_doubles_weights():
    meta = init_siren(2, [8, 8], 2, seed=0)
    mods = ModulationCoeffs(
        gamma=tuple(np.ones_like(W) for W, _ in meta.layers),
        beta=tuple(np.zeros_like(b) for _, b in meta.layers),
    )
    field = modulate(meta, mods)
    for (W, _), We in zip(meta.layers, field.weights):
        assert np.allclose(We, 2.0 * W, rtol=0, atol=0)


def test_one_layer_modulated_closed_form(rng):
    # Ŵ = W(1+γ), b̂ = b+β enters the sine argument directly
    w, b, wo, bo = 0.7, 0.2, 1.3, -0.4
    g, be = 0.35, -0.15
    field = one_layer_field(w, b, wo, bo, omega0=2.0, gamma=g, beta=be)
    for tau in rng.uniform(-1, 1, size=16):
        want = wo * np.sin(2.0 * (w * (1 + g) * tau + b + be)) + bo
        assert abs(eval_position(field, tau)[0] - want) < 1e-14


def test_modulation_shape_mismatch_rejected():
    meta = init_siren(2, [8, 8], 2, seed=0)
    bad = ModulationCoeffs(
        gamma=(np.zeros((8, 1)),),  # one layer missing
        beta=(np.zeros(8),),
    )
    with pytest.raises(StructureError):
        modulate(meta, bad)


# ----------------------------------------------------------------- evaluation

def test_eval_unit_net():
    field = one_layer_field(1.0, 0.0, 1.0, 0.0, omega0=1.0)
    assert abs(eval_position(field, 0.5)[0] - np.sin(0.5)) < 1e-15


def test_eval_zero_biases_at_origin_returns_readout_bias():
    # sin(0) = 0 propagates through every layer, so A(0) = b_out
    meta = init_siren(3, [16, 16, 16], 5, omega0=30.0, seed=9)
    field = modulate(meta, identity_mods(meta))
    assert np.allclose(eval_position(field, 0.0), meta.b_out, rtol=0, atol=0)


def _naive_eval(field, tau):
    # independent reference: layer loop written directly from the definition
    h = np.array([float(tau)])
    for W, b in zip(field.weights, field.biases):
        h = np.sin(field.omega0 * (W @ h + b))
    return field.w_out @ h + field.b_out


def test_eval_matches_independent_reference(rng):
    field = random_field(3, 16, 30.0, seed=11, D=4)
    for tau in rng.uniform(-1, 1, size=20):
        got = eval_position(field, tau)
        want = _naive_eval(field, tau)
        assert rel_err(got, want) < 1e-13


def test_backends_agree():
    field = random_field(3, 32, 30.0, seed=13, D=3)
    tau = uniform_grid(64)
    via_python = pycore.eval_orders(
        field.weights, field.biases, field.w_out, field.b_out,
        field.omega0, tau, 3, "sine",
    )
    via_active = eval_grid(field, tau, 3)
    # jerk magnitudes reach ~1e5 here; normalize reassociation noise by the
    # order's own scale instead of per-element values
    for a, b in zip(via_python, via_active):
        denom = max(1.0, float(np.max(np.abs(b))))
        assert float(np.max(np.abs(a - b))) / denom < 1e-10


# ---------------------------------------------------------------- derivatives

def test_velocity_unit_net():
    field = one_layer_field(1.0, 0.0, 1.0, 0.0, omega0=1.0)
    assert abs(eval_velocity(field, 0.5)[0] - np.cos(0.5)) < 1e-15


def test_velocity_one_layer_closed_form(rng):
    # I5: the derivative has the same pre-activation as the value
    meta = init_siren(1, [8], 2, omega0=3.0, seed=21)
    mods = random_mods(meta, rng)
    field = modulate(meta, mods)
    W = field.weights[0][:, 0]
    b = field.biases[0]
    for tau in rng.uniform(-1, 1, size=12):
        pre = field.omega0 * (W * tau + b)
        want = field.w_out @ (field.omega0 * W * np.cos(pre))
        assert rel_err(eval_velocity(field, tau), want) < 1e-13


def test_acceleration_unit_net():
    field = one_layer_field(1.0, 0.0, 1.0, 0.0, omega0=1.0)
    for tau in (-0.8, 0.0, 0.3):
        assert abs(eval_acceleration(field, tau)[0] - (-np.sin(tau))) < 1e-15


def test_zero_weight_field_has_zero_derivatives():
    field = one_layer_field(0.0, 0.4, 2.0, 1.0, omega0=30.0)
    for tau in (-1.0, 0.1, 1.0):
        assert eval_velocity(field, tau)[0] == 0.0
        assert eval_acceleration(field, tau)[0] == 0.0
        assert eval_jerk(field, tau)[0] == 0.0


def test_jerk_unit_net():
    field = one_layer_field(1.0, 0.0, 1.0, 0.0, omega0=1.0)
    for tau in (-0.5, 0.0, 0.9):
        assert abs(eval_jerk(field, tau)[0] - (-np.cos(tau))) < 1e-15


def test_jerk_scales_cubically_with_omega0():
    lo = one_layer_field(1.0, 0.0, 1.0, 0.0, omega0=1.0)
    hi = one_layer_field(1.0, 0.0, 1.0, 0.0, omega0=2.0)
    j_lo = eval_jerk(lo, 0.0)[0]
    j_hi = eval_jerk(hi, 0.0)[0]
    assert abs(j_hi / j_lo - 8.0) < 1e-12


def test_velocity_matches_fd_at_pinned_step(rng):
    # 3-layer field, h = 1e-5: velocity within 1e-6 of the stencil. At this
    # step the stencil truncation is h^2/6 * |jerk|, so the bound only holds
    # for fields whose jerk stays ~O(1); omega0 = 1 keeps it there.
    field = random_field(3, 64, 1.0, seed=77, D=3)
    h = FD_H
    for tau in rng.uniform(-1, 1, size=30):
        fd = (eval_position(field, tau + h) - eval_position(field, tau - h)) / (2 * h)
        assert rel_err(eval_velocity(field, tau), fd) < 1e-6


# Sweep step: small enough that the stencil's own h^2 truncation stays well
# under each threshold even when the next-higher derivative reaches ~1e5
# (omega0=30, modulated), large enough that roundoff stays ~1e-9.
FD_H_SWEEP = 2e-6


@pytest.mark.parametrize("L,width,omega0", [
    (1, 8, 1.0), (1, 64, 30.0),
    (2, 8, 30.0), (2, 64, 1.0),
    (3, 8, 1.0), (3, 64, 30.0),
])
def test_derivatives_match_finite_differences(L, width, omega0):
    # I1: central differences of the next-lower order are the oracle
    field = random_field(L, width, omega0, seed=100 + L * 10 + width, D=3)
    rng = np.random.default_rng(L * 7 + width)
    taus = rng.uniform(-1, 1, size=100)
    h = FD_H_SWEEP
    for tau in taus:
        fd_vel = (eval_position(field, tau + h) - eval_position(field, tau - h)) / (2 * h)
        fd_acc = (eval_velocity(field, tau + h) - eval_velocity(field, tau - h)) / (2 * h)
        fd_jerk = (eval_acceleration(field, tau + h) - eval_acceleration(field, tau - h)) / (2 * h)
        assert rel_err(eval_velocity(field, tau), fd_vel) < 1e-6
        assert rel_err(eval_acceleration(field, tau), fd_acc) < 1e-5
        assert rel_err(eval_jerk(field, tau), fd_jerk) < 1e-4


def test_all_orders_finite_on_domain():
    # I4: sine networks have no kinks; every order stays finite
    for seed in range(4):
        field = random_field(3, 32, 30.0, seed=seed, D=2)
        out = eval_grid(field, uniform_grid(101), 3)
        for arr in out:
            assert np.isfinite(arr).all()


# ------------------------------------------------------------------- sampling

def test_uniform_grid_endpoints_exact():
    tau = uniform_grid(10)
    assert tau[0] == -1.0 and tau[9] == 1.0
    assert abs(tau[1] - (-7.0 / 9.0)) < 1e-15
    with pytest.raises(ConfigError):
        uniform_grid(1)


def test_grid_sharing():
    # K=50 has no tau=0 sample; K=51 and K=201 both do, at the same bits
    assert not np.any(uniform_grid(50) == 0.0)
    g51, g201 = uniform_grid(51), uniform_grid(201)
    assert g51[25] == 0.0 and g201[100] == 0.0
    assert np.array_equal(g51, g201[::4])


def test_resolution_independence():
    # I3: sampling is a pure function of tau, so shared points agree exactly
    field = random_field(2, 16, 30.0, seed=31, D=2)
    p51 = sample_chunk(field, 51, 2.0).position
    p201 = sample_chunk(field, 201, 2.0).position
    assert np.array_equal(p51, p201[::4])
    p50 = sample_chunk(field, 50, 2.0).position
    p200 = sample_chunk(field, 200, 2.0).position
    assert np.array_equal(p50[[0, -1]], p200[[0, -1]])


def test_sample_chunk_time_scaling():
    field = random_field(1, 8, 1.0, seed=37, D=2)
    prof2 = sample_chunk(field, 10, 2.0, orders=("pos", "vel", "acc", "jerk"))
    prof1 = sample_chunk(field, 10, 1.0, orders=("pos", "vel", "acc", "jerk"))
    # T=2 makes physical and normalized derivatives coincide (2/T = 1)
    raw = eval_grid(field, prof2.tau, 3)
    assert np.array_equal(prof2.velocity, raw[1])
    assert np.array_equal(prof2.position, prof1.position)
    assert np.allclose(prof1.velocity, 2.0 * prof2.velocity, rtol=0, atol=0)
    assert np.allclose(prof1.acceleration, 4.0 * prof2.acceleration, rtol=0, atol=0)
    assert np.allclose(prof1.jerk, 8.0 * prof2.jerk, rtol=0, atol=0)


def test_sample_chunk_validation():
    field = random_field(1, 8, 1.0, seed=41, D=1)
    with pytest.raises(ConfigError):
        sample_chunk(field, 10, 0.0)
    with pytest.raises(ConfigError):
        sample_chunk(field, 10, 2.0, orders=("pos", "snap"))
    prof = sample_chunk(field, 10, 2.0, orders=("pos",))
    assert prof.velocity is None and prof.acceleration is None and prof.jerk is None


def test_kinematic_profile_rejects_unsorted_tau():
    with pytest.raises(StructureError):
        KinematicProfile(
            tau=np.array([0.0, 0.0, 1.0]),
            duration_T=2.0,
            position=np.zeros((3, 1)),
        )
