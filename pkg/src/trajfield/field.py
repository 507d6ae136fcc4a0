"""Modulated sinusoidal field over normalized time.

A chunk trajectory is a function A(tau) on tau in [-1, 1]: a stack of
sine-activated hidden layers followed by a linear readout. Shared meta
parameters act as the motion prior; per-instance multiplicative (gamma) and
additive (beta) coefficients deform the hidden layers only, leaving the
readout untouched. Because the activations are sines, velocity,
acceleration, and jerk are available in closed form by propagating
derivative states through the same layer structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .errors import ConfigError, StructureError

ORDER_NAMES = ("pos", "vel", "acc", "jerk")


def _freeze(a: np.ndarray) -> np.ndarray:
    # Copy unconditionally: flipping the write flag on a caller's array
    # would poison arrays the optimizer still updates in place.
    a = np.array(a, dtype=np.float64, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SirenMeta:
    """Shared decoder parameters: hidden (W, b) per layer plus linear readout."""

    layers: tuple  # ((W, b), ...) with W[l] of shape (n_l, n_{l-1}), n_0 = 1
    w_out: np.ndarray  # (D, n_L)
    b_out: np.ndarray  # (D,)
    omega0: float

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ConfigError("config.bad_value:omega0", "omega0 must be > 0")
        prev = 1
        frozen = []
        for W, b in self.layers:
            W = _freeze(W)
            b = _freeze(b)
            if W.ndim != 2 or W.shape[1] != prev or b.shape != (W.shape[0],):
                raise StructureError("structure.bad_shape:siren_layer")
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise StructureError("structure.non_finite:siren_layer")
            frozen.append((W, b))
            prev = W.shape[0]
        object.__setattr__(self, "layers", tuple(frozen))
        object.__setattr__(self, "w_out", _freeze(self.w_out))
        object.__setattr__(self, "b_out", _freeze(self.b_out))
        if self.w_out.shape != (self.b_out.shape[0], prev):
            raise StructureError("structure.bad_shape:siren_out")
        if not (np.isfinite(self.w_out).all() and np.isfinite(self.b_out).all()):
            raise StructureError("structure.non_finite:siren_out")

    @property
    def L(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> list:
        return [W.shape[0] for W, _ in self.layers]

    @property
    def D(self) -> int:
        return self.w_out.shape[0]


@dataclass(frozen=True)
class ModulationCoeffs:
    """Per-instance deformation: gamma shaped like each W, beta like each b.

    All-zero coefficients are the identity (the field equals the prior).
    """

    gamma: tuple
    beta: tuple

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(_freeze(g) for g in self.gamma))
        object.__setattr__(self, "beta", tuple(_freeze(b) for b in self.beta))
        for g, b in zip(self.gamma, self.beta):
            if not (np.isfinite(g).all() and np.isfinite(b).all()):
                raise StructureError("structure.non_finite:modulation")


def identity_mods(meta: SirenMeta) -> ModulationCoeffs:
    return ModulationCoeffs(
        gamma=tuple(np.zeros_like(W) for W, _ in meta.layers),
        beta=tuple(np.zeros_like(b) for _, b in meta.layers),
    )


@dataclass(frozen=True)
class ModulatedField:
    """Effective parameters ready for evaluation; readout is unmodulated."""

    weights: tuple  # effective hidden W-hat per layer
    biases: tuple  # effective hidden b-hat per layer
    w_out: np.ndarray
    b_out: np.ndarray
    omega0: float
    activation: str = "sine"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(_freeze(W) for W in self.weights))
        object.__setattr__(self, "biases", tuple(_freeze(b) for b in self.biases))
        object.__setattr__(self, "w_out", _freeze(self.w_out))
        object.__setattr__(self, "b_out", _freeze(self.b_out))
        if self.activation not in ("sine", "relu"):
            raise ConfigError("config.bad_value:activation", self.activation)

    @property
    def D(self) -> int:
        return self.w_out.shape[0]


@dataclass(frozen=True)
class KinematicProfile:
    """Sampled kinematics over one chunk, physical units for derivatives."""

    tau: np.ndarray  # (K,), strictly increasing in [-1, 1]
    duration_T: float
    position: np.ndarray  # (K, D)
    velocity: np.ndarray | None = None
    acceleration: np.ndarray | None = None
    jerk: np.ndarray | None = None

    def __post_init__(self):
        if self.duration_T <= 0:
            raise ConfigError("config.bad_value:duration_T")
        if np.any(np.diff(self.tau) <= 0):
            raise StructureError("structure.bad_grid:tau not strictly increasing")
        K = self.tau.shape[0]
        for name in ("position", "velocity", "acceleration", "jerk"):
            arr = getattr(self, name)
            if arr is not None and arr.shape[0] != K:
                raise StructureError(f"structure.bad_shape:{name}")


def init_siren(L: int, widths, D: int, omega0: float = 30.0, seed: int = 0) -> SirenMeta:
    """Draw prior parameters with the standard sine-network scheme.

    First layer uniform on [-1/n_0, 1/n_0] (n_0 = 1); deeper hidden layers
    uniform on +-sqrt(6/fan_in)/omega0; readout uniform on +-sqrt(6/n_L);
    biases zero. Deterministic for a fixed seed.
    """
    widths = [int(w) for w in widths]
    if L < 1 or len(widths) != L or any(w <= 0 for w in widths) or D < 1:
        raise ConfigError("config.bad_value:architecture")
    if omega0 <= 0:
        raise ConfigError("config.bad_value:omega0")
    rng = np.random.default_rng(seed)
    layers = []
    fan_in = 1
    for ell, n in enumerate(widths):
        if ell == 0:
            bound = 1.0 / fan_in
        else:
            bound = np.sqrt(6.0 / fan_in) / omega0
        W = rng.uniform(-bound, bound, size=(n, fan_in))
        layers.append((W, np.zeros(n)))
        fan_in = n
    bound = np.sqrt(6.0 / fan_in)
    w_out = rng.uniform(-bound, bound, size=(D, fan_in))
    return SirenMeta(layers=tuple(layers), w_out=w_out, b_out=np.zeros(D), omega0=float(omega0))


def modulate(meta: SirenMeta, mods: ModulationCoeffs, activation: str = "sine") -> ModulatedField:
    """Apply W-hat = W * (1 + gamma), b-hat = b + beta to the hidden layers."""
    if len(mods.gamma) != meta.L or len(mods.beta) != meta.L:
        raise StructureError("structure.bad_shape:modulation layer count")
    weights = []
    biases = []
    for (W, b), g, be in zip(meta.layers, mods.gamma, mods.beta):
        if g.shape != W.shape or be.shape != b.shape:
            raise StructureError("structure.bad_shape:modulation")
        weights.append(W * (1.0 + g))
        biases.append(b + be)
    return ModulatedField(
        weights=tuple(weights),
        biases=tuple(biases),
        w_out=meta.w_out,
        b_out=meta.b_out,
        omega0=meta.omega0,
        activation=activation,
    )


def _eval_single(field: ModulatedField, tau: float, order: int) -> np.ndarray:
    tau = float(tau)
    if not np.isfinite(tau):
        raise ConfigError("config.bad_value:tau", "tau must be finite")
    out = kernels.eval_orders(
        field.weights, field.biases, field.w_out, field.b_out,
        field.omega0, np.array([tau]), order, field.activation,
    )
    return out[order][0]


def eval_position(field: ModulatedField, tau: float) -> np.ndarray:
    """A(tau), shape (D,). Pure function of (field, tau)."""
    return _eval_single(field, tau, 0)


def eval_velocity(field: ModulatedField, tau: float) -> np.ndarray:
    """dA/dtau in normalized-time units (caller applies 2/T for physical)."""
    return _eval_single(field, tau, 1)


def eval_acceleration(field: ModulatedField, tau: float) -> np.ndarray:
    return _eval_single(field, tau, 2)


def eval_jerk(field: ModulatedField, tau: float) -> np.ndarray:
    return _eval_single(field, tau, 3)


def uniform_grid(K: int) -> np.ndarray:
    """tau_k = -1 + 2k/(K-1). Exact at both endpoints."""
    if K < 2:
        raise ConfigError("config.bad_value:K", "need K >= 2")
    return (2.0 * np.arange(K)) / (K - 1) - 1.0


def eval_grid(field: ModulatedField, tau: np.ndarray, order: int) -> list:
    """Field value and derivatives (normalized units) on an arbitrary grid."""
    return kernels.eval_orders(
        field.weights, field.biases, field.w_out, field.b_out,
        field.omega0, np.asarray(tau, dtype=np.float64), order, field.activation,
    )


def sample_chunk(field: ModulatedField, K: int, duration_T: float, orders=("pos",)) -> KinematicProfile:
    """Sample the field on the uniform K-point grid over [-1, 1].

    Derivatives are rescaled to physical time: velocity by 2/T, acceleration
    by (2/T)^2, jerk by (2/T)^3. Sampling is purely functional, so grids that
    share a tau value produce identical numbers there regardless of K.
    """
    if duration_T <= 0:
        raise ConfigError("config.bad_value:duration_T")
    unknown = set(orders) - set(ORDER_NAMES)
    if unknown:
        raise ConfigError("config.bad_value:orders", f"unknown orders {sorted(unknown)}")
    tau = uniform_grid(K)
    max_order = max(ORDER_NAMES.index(o) for o in orders) if orders else 0
    raw = eval_grid(field, tau, max_order)
    scale = 2.0 / duration_T
    want = set(orders)
    return KinematicProfile(
        tau=tau,
        duration_T=float(duration_T),
        position=raw[0],
        velocity=raw[1] * scale if "vel" in want else None,
        acceleration=raw[2] * scale ** 2 if "acc" in want else None,
        jerk=raw[3] * scale ** 3 if "jerk" in want else None,
    )


def field_orders_graph(weights, biases, w_out, b_out, omega0: float, tau: np.ndarray,
                       order: int, activation: str = "sine") -> list:
    """Autodiff-graph version of the evaluation kernel.

    Parameters are `autodiff.Var` nodes; the returned list holds Vars of
    shape (K, D) for the value and each requested derivative order, built
    from the same layer recursions as the kernels so that training can
    differentiate through them with respect to every parameter.
    """
    K = tau.shape[0]
    h = ad.Var(tau.reshape(K, 1))
    hd = ad.Var(np.ones((K, 1)))
    hdd = ad.Var(np.zeros((K, 1)))
    hddd = ad.Var(np.zeros((K, 1)))

    for W, b in zip(weights, biases):
        Wt = ad.transpose(W)
        u = ad.scale(ad.add(ad.matmul(h, Wt), b), omega0)
        if activation == "sine":
            f = ad.sin(u)
            fp = ad.cos(u)
            fpp = ad.neg(f)
            fppp = ad.neg(fp)
        else:
            f = ad.relu(u)
            fp = ad.step(u)
            fpp = None
            fppp = None
        if order >= 1:
            ud = ad.scale(ad.matmul(hd, Wt), omega0)
        if order >= 2:
            udd = ad.scale(ad.matmul(hdd, Wt), omega0)
        if order >= 3:
            uddd = ad.scale(ad.matmul(hddd, Wt), omega0)
        h = f
        if order >= 1:
            new_hd = ad.mul(fp, ud)
        if order >= 2:
            if fpp is None:
                new_hdd = ad.mul(fp, udd)
            else:
                new_hdd = ad.add(ad.mul(ad.mul(fpp, ud), ud), ad.mul(fp, udd))
        if order >= 3:
            if fppp is None:
                new_hddd = ad.mul(fp, uddd)
            else:
                cubic = ad.mul(ad.mul(ad.mul(fppp, ud), ud), ud)
                cross = ad.scale(ad.mul(ad.mul(fpp, ud), udd), 3.0)
                new_hddd = ad.add(ad.add(cubic, cross), ad.mul(fp, uddd))
        if order >= 1:
            hd = new_hd
        if order >= 2:
            hdd = new_hdd
        if order >= 3:
            hddd = new_hddd

    wt = ad.transpose(w_out)
    out = [ad.add(ad.matmul(h, wt), b_out)]
    if order >= 1:
        out.append(ad.matmul(hd, wt))
    if order >= 2:
        out.append(ad.matmul(hdd, wt))
    if order >= 3:
        out.append(ad.matmul(hddd, wt))
    return out
