"""Physics-informed losses and the fitting loop.

Supervised terms compare the field's analytic kinematics, rescaled to
physical time by powers of 2/T, against stored chunk targets on the uniform
grid of size K = H. The jerk term is an unsupervised smoothness penalty.
A loss component is only ever computed (and its targets only ever read)
when its weight is strictly positive.

Gradients come from the reverse-mode graph in `autodiff`: the derivative
recursions are recorded as ordinary operations, so second- and third-order
time derivatives of the field are differentiated with respect to every
trainable array exactly, not approximately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .baselines import diff1
from .data import ChunkRecord
from .errors import ConfigError, DivergenceError
from .field import ModulatedField, eval_grid, field_orders_graph, uniform_grid
from .hypermod import encode_context_graph, modulate_graph, project_modulation_graph
from .model import FieldModel, check_finite, init_model, model_params, with_params, realize_field

HISTORY_COLUMNS = ("step", "L_pos", "L_vel", "L_acc", "L_jerk", "L_total")


@dataclass(frozen=True)
class LossWeights:
    lambda_p: float = 1.0
    lambda_v: float = 0.1
    lambda_a: float = 0.01
    lambda_j: float = 0.001

    def __post_init__(self):
        vals = (self.lambda_p, self.lambda_v, self.lambda_a, self.lambda_j)
        if any(v < 0 for v in vals):
            raise ConfigError("config.bad_value:lambdas", "weights must be non-negative")
        if not any(v > 0 for v in vals):
            raise ConfigError("config.bad_value:lambdas", "at least one weight must be positive")

    @property
    def max_order(self) -> int:
        order = 0
        for n, v in ((1, self.lambda_v), (2, self.lambda_a), (3, self.lambda_j)):
            if v > 0:
                order = n
        return order


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    # short-memory beta2 (0.95 and below) turns Adam into fixed-step sign
    # descent on these oscillatory landscapes, flooring the loss near 1e-2
    betas: tuple = (0.9, 0.999)
    steps: int = 2000
    batch_size: int = 1
    seed: int = 0
    activation: str = "sine"
    optimizer: str = "adamw"
    weight_decay: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("config.bad_value:learning_rate")
        b1, b2 = self.betas
        if not (0 <= b1 < 1 and 0 <= b2 < 1):
            raise ConfigError("config.bad_value:betas")
        if self.steps < 0 or self.batch_size < 1:
            raise ConfigError("config.bad_value:steps")
        if self.activation not in ("sine", "relu"):
            raise ConfigError("config.bad_value:activation", self.activation)
        if self.optimizer not in ("adamw", "sgd"):
            raise ConfigError("config.bad_value:optimizer", self.optimizer)
        if self.weight_decay < 0:
            raise ConfigError("config.bad_value:weight_decay")


def _require_velocities(chunk: ChunkRecord) -> None:
    if chunk.velocities is None:
        raise ConfigError("config.missing_key:velocities", chunk.id)


def target_acceleration(chunk: ChunkRecord) -> np.ndarray:
    """Acceleration targets: second-order finite differences of the stored
    velocities over the physical grid spacing."""
    _require_velocities(chunk)
    dt = chunk.duration_T / (chunk.H - 1)
    return diff1(chunk.velocities, dt)


def loss_pos(field: ModulatedField, chunk: ChunkRecord) -> float:
    pos = eval_grid(field, uniform_grid(chunk.H), 0)[0]
    return float(np.sum((pos - chunk.positions) ** 2) / chunk.H)


def loss_vel(field: ModulatedField, chunk: ChunkRecord) -> float:
    _require_velocities(chunk)
    scale = 2.0 / chunk.duration_T
    vel = eval_grid(field, uniform_grid(chunk.H), 1)[1] * scale
    return float(np.sum((vel - chunk.velocities) ** 2) / chunk.H)


def loss_acc(field: ModulatedField, chunk: ChunkRecord) -> float:
    alpha = target_acceleration(chunk)
    scale = (2.0 / chunk.duration_T) ** 2
    acc = eval_grid(field, uniform_grid(chunk.H), 2)[2] * scale
    return float(np.sum((acc - alpha) ** 2) / chunk.H)


def loss_jerk(field: ModulatedField, chunk: ChunkRecord) -> float:
    """Unsupervised penalty; needs only the chunk's grid size and duration."""
    scale = (2.0 / chunk.duration_T) ** 3
    jerk = eval_grid(field, uniform_grid(chunk.H), 3)[3] * scale
    return float(np.sum(jerk ** 2) / chunk.H)


def total_loss(field: ModulatedField, chunk: ChunkRecord, w: LossWeights) -> float:
    total = 0.0
    if w.lambda_p > 0:
        total += w.lambda_p * loss_pos(field, chunk)
    if w.lambda_v > 0:
        total += w.lambda_v * loss_vel(field, chunk)
    if w.lambda_a > 0:
        total += w.lambda_a * loss_acc(field, chunk)
    if w.lambda_j > 0:
        total += w.lambda_j * loss_jerk(field, chunk)
    return total


# ---------------------------------------------------------------------------
# Graph construction.


def _collect_head_vars(vars: dict, L: int, G: int) -> list:
    out = []
    for ell in range(L):
        out.append({
            "gamma": [(vars[f"heads.{ell}.gamma.{g}.weight"], vars[f"heads.{ell}.gamma.{g}.bias"])
                      for g in range(G)],
            "beta": (vars[f"heads.{ell}.beta.weight"], vars[f"heads.{ell}.beta.bias"]),
        })
    return out


def _mse_graph(x: ad.Var, targets, K: int) -> ad.Var:
    d = x if targets is None else ad.sub(x, ad.Var(np.asarray(targets, dtype=np.float64)))
    return ad.scale(ad.sum_all(ad.mul(d, d)), 1.0 / K)


def chunk_loss_graph(vars: dict, model: FieldModel, chunk: ChunkRecord, w: LossWeights,
                     chunk_index=None):
    """Total loss for one chunk as a graph node, plus the component values.

    `vars` is the flat parameter dict wrapped in autodiff Vars; `model`
    supplies only static structure (layer widths, G, mode, activation).
    Returns (total: Var, components: dict of float).
    """
    L = model.meta.L
    widths = model.meta.widths
    if model.mode == "encoder":
        enc_vars = {k: vars["encoder." + k] for k in ("E_qry", "V1", "c1", "V2", "c2")}
        Z = encode_context_graph(enc_vars, chunk.context)
    else:
        Z = vars[f"latents.{chunk_index}"]
    gammas, betas = project_modulation_graph(Z, _collect_head_vars(vars, L, model.G), L, model.G, widths)
    meta_vars = {"W": [vars[f"siren.W.{i}"] for i in range(L)],
                 "b": [vars[f"siren.b.{i}"] for i in range(L)]}
    weights, biases = modulate_graph(meta_vars, gammas, betas)

    K = chunk.H
    tau = uniform_grid(K)
    outs = field_orders_graph(weights, biases, vars["siren.w_out"], vars["siren.b_out"],
                              model.meta.omega0, tau, w.max_order, model.activation)
    s = 2.0 / chunk.duration_T

    components = {"L_pos": 0.0, "L_vel": 0.0, "L_acc": 0.0, "L_jerk": 0.0}
    terms = []
    if w.lambda_p > 0:
        node = _mse_graph(outs[0], chunk.positions, K)
        components["L_pos"] = float(node.value)
        terms.append(ad.scale(node, w.lambda_p))
    if w.lambda_v > 0:
        _require_velocities(chunk)
        node = _mse_graph(ad.scale(outs[1], s), chunk.velocities, K)
        components["L_vel"] = float(node.value)
        terms.append(ad.scale(node, w.lambda_v))
    if w.lambda_a > 0:
        node = _mse_graph(ad.scale(outs[2], s ** 2), target_acceleration(chunk), K)
        components["L_acc"] = float(node.value)
        terms.append(ad.scale(node, w.lambda_a))
    if w.lambda_j > 0:
        node = _mse_graph(ad.scale(outs[3], s ** 3), None, K)
        components["L_jerk"] = float(node.value)
        terms.append(ad.scale(node, w.lambda_j))

    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    components["L_total"] = float(total.value)
    return total, components


def batch_loss_graph(vars: dict, model: FieldModel, dataset: list, indices, w: LossWeights):
    """Mean chunk loss over a batch. Reduction order is ascending dataset
    index regardless of how `indices` is permuted, so the result is
    bit-stable under batch reordering."""
    ordered = sorted(int(i) for i in indices)
    totals = []
    sums = {"L_pos": 0.0, "L_vel": 0.0, "L_acc": 0.0, "L_jerk": 0.0, "L_total": 0.0}
    for i in ordered:
        node, comp = chunk_loss_graph(vars, model, dataset[i], w, chunk_index=i)
        totals.append(node)
        for k in sums:
            sums[k] += comp[k]
    total = totals[0]
    for t in totals[1:]:
        total = ad.add(total, t)
    total = ad.scale(total, 1.0 / len(ordered))
    means = {k: v / len(ordered) for k, v in sums.items()}
    return total, means


def grad_params(loss_fn, params: dict) -> dict:
    """Reverse-mode gradient of a scalar loss with respect to a flat dict.

    `loss_fn` receives {name: Var} and returns a scalar Var. Parameters the
    graph never touches get zero gradients of matching shape.
    """
    vars = {k: ad.Var(v) for k, v in params.items()}
    loss = loss_fn(vars)
    ad.backward(loss)
    return {
        k: (vars[k].grad if vars[k].grad is not None else np.zeros_like(params[k]))
        for k in sorted(params)
    }


# ---------------------------------------------------------------------------
# Optimizers and the loop.


class _AdamW:
    def __init__(self, params: dict, lr: float, betas, weight_decay: float, eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.wd = weight_decay
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def update(self, params: dict, grads: dict) -> None:
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for k in sorted(params):
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            mhat = self.m[k] / bc1
            vhat = self.v[k] / bc2
            if self.wd > 0:
                params[k] -= self.lr * self.wd * params[k]
            params[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _SGD:
    def __init__(self, params: dict, lr: float):
        self.lr = lr

    def update(self, params: dict, grads: dict) -> None:
        for k in sorted(params):
            params[k] -= self.lr * grads[k]


def fit(dataset: list, config: TrainConfig, w: LossWeights, mode: str = "auto_decoder",
        model: FieldModel = None):
    """Run `config.steps` optimizer updates over seeded mini-batches.

    Returns (trained FieldModel, history) where history is one row per step:
    {step, L_pos, L_vel, L_acc, L_jerk, L_total} with zeros for components
    whose weight is zero. Aborts with a diagnostic if the loss or any
    parameter goes non-finite.
    """
    if not dataset:
        raise ConfigError("config.bad_value:dataset", "empty dataset")
    D = dataset[0].D
    C = dataset[0].context.shape[0]
    for c in dataset:
        if c.D != D or c.context.shape[0] != C:
            raise ConfigError("config.bad_value:dataset", "chunks disagree on D or context size")

    if model is None:
        model = init_model(D=D, context_dim=C, num_chunks=len(dataset), mode=mode,
                           activation=config.activation, seed=config.seed)
    if model.mode != mode:
        raise ConfigError("config.bad_value:mode", f"model is {model.mode}, requested {mode}")
    if mode == "auto_decoder" and len(model.latents) != len(dataset):
        raise ConfigError("config.bad_value:dataset", "latent table does not match dataset size")

    params = model_params(model)
    if config.optimizer == "adamw":
        opt = _AdamW(params, config.learning_rate, config.betas, config.weight_decay)
    else:
        opt = _SGD(params, config.learning_rate)

    rng = np.random.default_rng(config.seed)
    history = []
    order = []
    step = 0
    while step < config.steps:
        if len(order) < config.batch_size:
            order.extend(rng.permutation(len(dataset)).tolist())
        batch = order[: config.batch_size]
        del order[: config.batch_size]

        vars = {k: ad.Var(v) for k, v in params.items()}
        total, means = batch_loss_graph(vars, model, dataset, batch, w)
        if not np.isfinite(total.value):
            raise DivergenceError(f"train.diverged:step_{step}")
        ad.backward(total)
        grads = {k: (vars[k].grad if vars[k].grad is not None else np.zeros_like(params[k]))
                 for k in params}
        opt.update(params, grads)
        if not check_finite(params):
            raise DivergenceError(f"train.diverged:step_{step}")
        row = {"step": step}
        row.update(means)
        history.append(row)
        step += 1

    return with_params(model, params), history


def write_history_csv(path, history) -> None:
    with open(path, "w") as f:
        f.write(",".join(HISTORY_COLUMNS) + "\n")
        for row in history:
            f.write(",".join(repr(row[c]) if c != "step" else str(row[c]) for c in HISTORY_COLUMNS) + "\n")


def chunk_rmse(model: FieldModel, chunk: ChunkRecord, chunk_index=None, order: str = "pos") -> float:
    """Per-element RMSE against the chunk's stored positions or velocities,
    on the chunk's own grid."""
    field = realize_field(
        model,
        context=chunk.context if model.mode == "encoder" else None,
        chunk_index=chunk_index,
    )
    if order == "pos":
        pred = eval_grid(field, uniform_grid(chunk.H), 0)[0]
        ref = chunk.positions
    elif order == "vel":
        _require_velocities(chunk)
        pred = eval_grid(field, uniform_grid(chunk.H), 1)[1] * (2.0 / chunk.duration_T)
        ref = chunk.velocities
    else:
        raise ConfigError("config.bad_value:order", order)
    return float(np.sqrt(np.mean((pred - ref) ** 2)))
