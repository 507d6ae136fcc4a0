"""Command-line entry points: generate, train, sample, simulate, compare.

Configuration is a flat JSON document of dotted keys; every key has a
default, unknown keys are rejected, and each command writes the fully
resolved config next to its outputs so a run can be replayed verbatim.
Errors exit with the class-specific code and print one machine-parsable
reason token on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import baselines, checkpoint, data, simctl, svgplot, train
from .errors import ConfigError, DataError, TrajfieldError
from .field import ORDER_NAMES, eval_grid, sample_chunk, uniform_grid
from .model import init_model, realize_field

OUT_ENV = "TRAJFIELD_OUT"

DEFAULTS = {
    "arch.L": 3,
    "arch.widths": [64, 64, 64],
    "arch.omega0": 30.0,
    "arch.G": 16,
    "arch.d": 32,
    "arch.encoder_hidden": 64,
    "train.lr": 1e-3,
    "train.betas": [0.9, 0.999],
    "train.steps": 2000,
    "train.batch": 1,
    "train.seed": 0,
    "train.lambdas": [1.0, 0.1, 0.01, 0.001],
    "train.activation": "sine",
    "train.mode": "auto_decoder",
    "train.optimizer": "adamw",
    "train.weight_decay": 0.0,
    "data.task": "minjerk",
    "data.num_chunks": 4,
    "data.D": 2,
    "data.H": 10,
    "data.T": 2.0,
    "data.seed": 0,
    "sim.dt": 0.001,
    "sim.controller_hz": 50.0,
    "sim.Kp": 400.0,
    "sim.Kd": 40.0,
    "sim.mass": 1.0,
    "sim.damping": 2.0,
    "sim.quantize_bins": 256,
    "compare.bspline_P": 8,
    "compare.upsample": 4,
    "io.dataset": "dataset.jsonl",
    "io.checkpoint": "checkpoint.json",
    "io.history": "history.csv",
    "io.profile": "profile.csv",
    "io.trace": "trace.csv",
    "io.report": "report.json",
    "io.svg": True,
}


def load_config(path=None) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as f:
                overrides = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config.missing_file:{path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config.malformed:{path}", str(e))
        if not isinstance(overrides, dict):
            raise ConfigError(f"config.malformed:{path}", "top level must be an object")
        for k, v in overrides.items():
            if k not in DEFAULTS:
                raise ConfigError(f"config.unknown_key:{k}")
            cfg[k] = v
    return cfg


def _io_path(cfg: dict, key: str, outdir: str) -> str:
    val = cfg[key]
    if not val:
        raise ConfigError(f"config.missing_key:{key}")
    return val if os.path.isabs(val) else os.path.join(outdir, val)


def echo_config(cfg: dict, outdir: str, command: str) -> str:
    path = os.path.join(outdir, f"{command}.config.json")
    with open(path, "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _train_config(cfg: dict) -> train.TrainConfig:
    return train.TrainConfig(
        learning_rate=float(cfg["train.lr"]),
        betas=tuple(cfg["train.betas"]),
        steps=int(cfg["train.steps"]),
        batch_size=int(cfg["train.batch"]),
        seed=int(cfg["train.seed"]),
        activation=cfg["train.activation"],
        optimizer=cfg["train.optimizer"],
        weight_decay=float(cfg["train.weight_decay"]),
    )


def _loss_weights(cfg: dict) -> train.LossWeights:
    lam = cfg["train.lambdas"]
    if len(lam) != 4:
        raise ConfigError("config.bad_value:train.lambdas", "need 4 weights")
    return train.LossWeights(*[float(v) for v in lam])


# ---------------------------------------------------------------------------
# Commands.


def cmd_generate(cfg: dict, outdir: str) -> list:
    task = cfg["data.task"]
    if task not in data.TASKS:
        raise ConfigError("config.bad_value:data.task", task)
    n = int(cfg["data.num_chunks"])
    D = int(cfg["data.D"])
    H = int(cfg["data.H"])
    T = float(cfg["data.T"])
    rng = np.random.default_rng(int(cfg["data.seed"]))
    records = []
    for i in range(n):
        rid = f"{task}-{i:03d}"
        if task == "minjerk":
            x0 = rng.uniform(-1.0, 1.0, size=D)
            xf = rng.uniform(-1.0, 1.0, size=D)
            records.append(data.gen_minjerk(x0, xf, T, H, id=rid))
        elif task == "sines":
            A = rng.uniform(0.1, 0.5, size=(2, D))
            F = rng.uniform(0.25, 1.0, size=(2, D))
            P = rng.uniform(0.0, 2.0 * np.pi, size=(2, D))
            records.append(data.gen_sines(A, F, P, T, H, id=rid))
        else:
            W = rng.uniform(-1.0, 1.0, size=(3, D))
            records.append(data.gen_pickplace(W, 0.15 * T, T, H, id=rid))
    path = _io_path(cfg, "io.dataset", outdir)
    data.write_dataset(path, records)
    return [path, echo_config(cfg, outdir, "generate")]


def cmd_train(cfg: dict, outdir: str) -> list:
    ds_path = _io_path(cfg, "io.dataset", outdir)
    if not os.path.exists(ds_path):
        raise DataError(f"data.missing_file:{ds_path}")
    dataset = data.read_dataset(ds_path)
    if not dataset:
        raise DataError("data.bad_record:empty_dataset")
    tc = _train_config(cfg)
    w = _loss_weights(cfg)
    mode = cfg["train.mode"]
    model = init_model(
        L=int(cfg["arch.L"]),
        widths=[int(x) for x in cfg["arch.widths"]],
        D=dataset[0].D,
        omega0=float(cfg["arch.omega0"]),
        G=int(cfg["arch.G"]),
        d=int(cfg["arch.d"]),
        context_dim=dataset[0].context.shape[0],
        num_chunks=len(dataset),
        mode=mode,
        activation=tc.activation,
        encoder_hidden=int(cfg["arch.encoder_hidden"]),
        seed=tc.seed,
    )
    model, history = train.fit(dataset, tc, w, mode=mode, model=model)
    ckpt_path = _io_path(cfg, "io.checkpoint", outdir)
    checkpoint.save_model(ckpt_path, model)
    hist_path = _io_path(cfg, "io.history", outdir)
    train.write_history_csv(hist_path, history)
    return [ckpt_path, hist_path, echo_config(cfg, outdir, "train")]


def _resolve_chunk(cfg, outdir, chunk_id):
    """(record, index) for a chunk id, or (None, None) when no id is given
    and the dataset is absent."""
    ds_path = _io_path(cfg, "io.dataset", outdir)
    if not os.path.exists(ds_path):
        if chunk_id is None:
            return None, None
        raise DataError(f"data.missing_file:{ds_path}")
    dataset = data.read_dataset(ds_path)
    if chunk_id is None:
        if not dataset:
            return None, None
        return dataset[0], 0
    for i, rec in enumerate(dataset):
        if rec.id == chunk_id:
            return rec, i
    raise DataError(f"data.unknown_chunk:{chunk_id}")


def _field_for(model, rec, idx):
    if model.mode == "encoder":
        if rec is None:
            raise ConfigError("config.missing_key:chunk_id", "encoder checkpoints need a chunk")
        return realize_field(model, context=rec.context)
    if idx is None or not model.latents:
        from .field import identity_mods, modulate

        return modulate(model.meta, identity_mods(model.meta), activation=model.activation)
    return realize_field(model, chunk_index=idx)


def profile_columns(D: int, orders) -> list:
    cols = ["tau"]
    for o in orders:
        cols.extend(f"{o}_{j}" for j in range(D))
    return cols


def write_profile_csv(path, profile, orders) -> None:
    arrays = {"pos": profile.position, "vel": profile.velocity,
              "acc": profile.acceleration, "jerk": profile.jerk}
    D = profile.position.shape[1]
    with open(path, "w") as f:
        f.write(",".join(profile_columns(D, orders)) + "\n")
        for k in range(profile.tau.shape[0]):
            vals = [profile.tau[k]]
            for o in orders:
                vals.extend(arrays[o][k])
            f.write(",".join(repr(float(x)) for x in vals) + "\n")


def cmd_sample(cfg: dict, outdir: str, args) -> list:
    ckpt_path = args.checkpoint or _io_path(cfg, "io.checkpoint", outdir)
    if not os.path.exists(ckpt_path):
        raise DataError(f"data.missing_file:{ckpt_path}")
    model = checkpoint.load_model(ckpt_path)
    rec, idx = _resolve_chunk(cfg, outdir, args.chunk_id)
    field = _field_for(model, rec, idx)
    orders = tuple(s.strip() for s in args.orders.split(",") if s.strip())
    for o in orders:
        if o not in ORDER_NAMES:
            raise ConfigError("config.bad_value:orders", o)
    T = args.T if args.T is not None else (rec.duration_T if rec is not None else float(cfg["data.T"]))
    profile = sample_chunk(field, args.K, T, orders=orders)
    path = _io_path(cfg, "io.profile", outdir)
    write_profile_csv(path, profile, orders)
    written = [path]
    if cfg["io.svg"]:
        panels = []
        arrays = {"pos": profile.position, "vel": profile.velocity,
                  "acc": profile.acceleration, "jerk": profile.jerk}
        for o in orders:
            arr = arrays[o]
            panels.append({
                "title": o,
                "series": [{"x": profile.tau, "y": arr[:, j], "label": f"dof {j}"}
                           for j in range(min(arr.shape[1], 6))],
            })
        svg_path = os.path.splitext(path)[0] + ".svg"
        svgplot.write_svg(svg_path, panels)
        written.append(svg_path)
    written.append(echo_config(cfg, outdir, "sample"))
    return written


def _plant_from(cfg: dict, D: int, position) -> simctl.Plant:
    return simctl.Plant(
        mass=np.full(D, float(cfg["sim.mass"])),
        damping=np.full(D, float(cfg["sim.damping"])),
        position=position,
        velocity=np.zeros(D),
        dt=float(cfg["sim.dt"]),
    )


def _gains_from(cfg: dict, D: int) -> simctl.ImpedanceGains:
    return simctl.ImpedanceGains(
        Kp=np.full(D, float(cfg["sim.Kp"])),
        Kd=np.full(D, float(cfg["sim.Kd"])),
    )


def cmd_simulate(cfg: dict, outdir: str, args) -> list:
    ckpt_path = args.checkpoint or _io_path(cfg, "io.checkpoint", outdir)
    if not os.path.exists(ckpt_path):
        raise DataError(f"data.missing_file:{ckpt_path}")
    model = checkpoint.load_model(ckpt_path)
    rec, idx = _resolve_chunk(cfg, outdir, args.chunk_id)
    if rec is None:
        raise ConfigError("config.missing_key:chunk_id", "simulate needs a dataset chunk")
    T = rec.duration_T
    dt = float(cfg["sim.dt"])
    steps = int(T / dt + 1e-9)
    if args.controller == "impedance":
        field = _field_for(model, rec, idx)
        start = eval_grid(field, np.array([-1.0]), 0)[0][0]
        plant = _plant_from(cfg, rec.D, start)
        trace = simctl.run_impedance(plant, field, _gains_from(cfg, rec.D), T, steps,
                                     controller_hz=float(cfg["sim.controller_hz"]))
    else:
        wp = baselines.WaypointChunk(points=rec.positions, duration_T=T)
        bins = int(cfg["sim.quantize_bins"])
        if bins >= 2:
            wp = baselines.quantize(wp, bins)
        plant = _plant_from(cfg, rec.D, wp.points[0].copy())
        trace = simctl.run_position_ctrl(plant, wp, _gains_from(cfg, rec.D), steps,
                                         controller_hz=float(cfg["sim.controller_hz"]))
    path = _io_path(cfg, "io.trace", outdir)
    simctl.write_trace_csv(path, trace)
    written = [path]
    if cfg["io.svg"]:
        panels = []
        for title, actual, ref in (("position", trace.position, trace.ref_position),
                                   ("velocity", trace.velocity, trace.ref_velocity)):
            series = []
            for j in range(min(trace.D, 3)):
                series.append({"x": trace.time, "y": actual[:, j], "label": f"dof {j}"})
                series.append({"x": trace.time, "y": ref[:, j], "dash": True})
            panels.append({"title": f"{title} ({trace.controller})", "series": series})
        svg_path = os.path.splitext(path)[0] + ".svg"
        svgplot.write_svg(svg_path, panels)
        written.append(svg_path)
    written.append(echo_config(cfg, outdir, "simulate"))
    return written


def _dense_ground_truth(rec, K: int):
    """Reconstruct closed-form kinematics at K samples when the record's
    context identifies a point-to-point profile; None otherwise."""
    C = rec.context
    D = rec.D
    if C.shape[0] != 3 + 2 * D:
        return None
    onehot = C[:3]
    if not (np.max(onehot) == 1.0 and np.sum(onehot) == 1.0):
        return None
    if data.TASKS[int(np.argmax(onehot))] != "minjerk":
        return None
    x0, xf = C[3 : 3 + D], C[3 + D :]
    return data.gen_minjerk(x0, xf, rec.duration_T, K, id=rec.id + "-dense")


def cmd_compare(cfg: dict, outdir: str, args) -> list:
    ckpt_path = args.checkpoint or _io_path(cfg, "io.checkpoint", outdir)
    if not os.path.exists(ckpt_path):
        raise DataError(f"data.missing_file:{ckpt_path}")
    model = checkpoint.load_model(ckpt_path)
    rec, idx = _resolve_chunk(cfg, outdir, args.chunk_id)
    if rec is None:
        raise ConfigError("config.missing_key:chunk_id", "compare needs a dataset chunk")
    if rec.velocities is None:
        raise DataError("data.bad_record:" + rec.id, "compare needs velocity targets")
    field = _field_for(model, rec, idx)
    T = rec.duration_T
    H = rec.H
    dt = float(cfg["sim.dt"])
    steps = int(T / dt + 1e-9)
    hz = float(cfg["sim.controller_hz"])
    gains = _gains_from(cfg, rec.D)
    upsample = int(cfg["compare.upsample"])
    K_up = upsample * H
    dense = _dense_ground_truth(rec, K_up)

    def rmse(a, b):
        return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))

    rows = []

    # Continuous field: analytic kinematics, impedance rollout.
    prof = sample_chunk(field, H, T, orders=("pos", "vel"))
    start = prof.position[0]
    trace_f = simctl.run_impedance(_plant_from(cfg, rec.D, start.copy()), field, gains, T, steps,
                                   controller_hz=hz)
    up_vel = None
    if dense is not None:
        prof_up = sample_chunk(field, K_up, T, orders=("pos", "vel"))
        up_vel = rmse(prof_up.velocity, dense.velocities)
    rows.append({
        "representation": "field",
        "pos_rmse": rmse(prof.position, rec.positions),
        "vel_rmse": rmse(prof.velocity, rec.velocities),
        "upsample_vel_rmse": up_vel,
        "jitter": simctl.jitter_metrics(trace_f),
    })

    # Quantized waypoints: finite differences, stiff position rollout.
    wp = baselines.quantize(baselines.WaypointChunk(points=rec.positions, duration_T=T),
                            int(cfg["sim.quantize_bins"]))
    trace_w = simctl.run_position_ctrl(_plant_from(cfg, rec.D, wp.points[0].copy()), wp, gains,
                                       steps, controller_hz=hz)
    up_vel = None
    if dense is not None:
        wp_up = baselines.interp_linear(wp, K_up)
        up_vel = rmse(baselines.fd_velocity(wp_up), dense.velocities)
    rows.append({
        "representation": "waypoints_quantized",
        "pos_rmse": rmse(wp.points, rec.positions),
        "vel_rmse": rmse(baselines.fd_velocity(wp), rec.velocities),
        "upsample_vel_rmse": up_vel,
        "jitter": simctl.jitter_metrics(trace_w),
    })

    # Cubic spline fit: analytic within the spline, no rollout.
    P = min(int(cfg["compare.bspline_P"]), H)
    bsp, residual = baselines.fit_bspline(
        baselines.WaypointChunk(points=rec.positions, duration_T=T), P)
    tau_grid = uniform_grid(H)
    bsp_pos = np.stack([baselines.bspline_eval(bsp, t) for t in tau_grid])
    dbsp = baselines.bspline_derivative(bsp)
    bsp_vel = np.stack([baselines.bspline_eval(dbsp, t) for t in tau_grid]) / T
    up_vel = None
    if dense is not None:
        tau_up = uniform_grid(K_up)
        up = np.stack([baselines.bspline_eval(dbsp, t) for t in tau_up]) / T
        up_vel = rmse(up, dense.velocities)
    rows.append({
        "representation": "bspline",
        "pos_rmse": rmse(bsp_pos, rec.positions),
        "vel_rmse": rmse(bsp_vel, rec.velocities),
        "upsample_vel_rmse": up_vel,
        "fit_residual": residual,
        "jitter": None,
    })

    report = {"chunk": rec.id, "H": H, "T": T, "upsample": upsample, "rows": rows}
    path = _io_path(cfg, "io.report", outdir)
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return [path, echo_config(cfg, outdir, "compare")]


# ---------------------------------------------------------------------------
# Argument parsing and dispatch.


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="flat JSON config file")
    common.add_argument("--seed", type=int, default=None, help="override train/data seeds")
    common.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_ENV} or '.')")

    p = argparse.ArgumentParser(prog="trajfield",
                                description="continuous-time action chunks and their baselines")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a synthetic chunk dataset")
    sub.add_parser("train", parents=[common], help="fit a field model to a dataset")

    s = sub.add_parser("sample", parents=[common], help="sample kinematics from a checkpoint")
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--chunk-id", default=None)
    s.add_argument("--K", type=int, default=200)
    s.add_argument("--T", type=float, default=None)
    s.add_argument("--orders", default="pos,vel")

    m = sub.add_parser("simulate", parents=[common], help="roll out a controller on the plant")
    m.add_argument("--checkpoint", default=None)
    m.add_argument("--chunk-id", default=None)
    m.add_argument("--controller", choices=("impedance", "position"), default="impedance")

    c = sub.add_parser("compare", parents=[common], help="representation comparison report")
    c.add_argument("--checkpoint", default=None)
    c.add_argument("--chunk-id", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["train.seed"] = args.seed
            cfg["data.seed"] = args.seed
        outdir = args.out or os.environ.get(OUT_ENV) or "."
        os.makedirs(outdir, exist_ok=True)
        if args.command == "generate":
            written = cmd_generate(cfg, outdir)
        elif args.command == "train":
            written = cmd_train(cfg, outdir)
        elif args.command == "sample":
            written = cmd_sample(cfg, outdir, args)
        elif args.command == "simulate":
            written = cmd_simulate(cfg, outdir, args)
        else:
            written = cmd_compare(cfg, outdir, args)
    except TrajfieldError as e:
        print(e.reason, file=sys.stderr)
        return e.exit_code
    except Exception as e:  # noqa: BLE001 - last-resort boundary
        print(f"internal:{type(e).__name__}", file=sys.stderr)
        return 4
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
