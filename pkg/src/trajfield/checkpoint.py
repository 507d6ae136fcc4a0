"""Model serialization: one JSON document, full double precision.

Layout: decoder parameters under "siren", projection heads under "heads",
then either "encoder" or "latents" depending on the conditioning mode.
"""

from __future__ import annotations

import json

import numpy as np

from .data import SCHEMA_VERSION
from .errors import DataError
from .field import SirenMeta
from .hypermod import AffineMap, ContextEncoder, LatentBlock, ProjectionHeads
from .model import FieldModel


def _dump_model(model: FieldModel) -> dict:
    doc = {
        "schema": SCHEMA_VERSION,
        "mode": model.mode,
        "activation": model.activation,
        "G": model.G,
        "d": model.d,
        "siren": {
            "omega0": model.meta.omega0,
            "W": [W.tolist() for W, _ in model.meta.layers],
            "b": [b.tolist() for _, b in model.meta.layers],
            "w_out": model.meta.w_out.tolist(),
            "b_out": model.meta.b_out.tolist(),
        },
        "heads": [
            {
                "gamma": [{"weight": h.weight.tolist(), "bias": h.bias.tolist()} for h in gheads],
                "beta": {"weight": bhead.weight.tolist(), "bias": bhead.bias.tolist()},
            }
            for gheads, bhead in zip(model.heads.gamma, model.heads.beta)
        ],
    }
    if model.mode == "encoder":
        enc = model.encoder
        doc["encoder"] = {
            "E_qry": enc.E_qry.tolist(), "V1": enc.V1.tolist(), "c1": enc.c1.tolist(),
            "V2": enc.V2.tolist(), "c2": enc.c2.tolist(),
        }
    else:
        doc["latents"] = [block.Z.tolist() for block in model.latents]
    return doc


def save_model(path, model: FieldModel) -> None:
    with open(path, "w") as f:
        json.dump(_dump_model(model), f)
        f.write("\n")


def load_model(path) -> FieldModel:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise DataError("data.malformed_checkpoint", str(e)) from e
    if doc.get("schema") != SCHEMA_VERSION:
        raise DataError("data.bad_schema", "unknown checkpoint schema")
    try:
        s = doc["siren"]
        meta = SirenMeta(
            layers=tuple(
                (np.asarray(W, dtype=np.float64), np.asarray(b, dtype=np.float64))
                for W, b in zip(s["W"], s["b"])
            ),
            w_out=np.asarray(s["w_out"], dtype=np.float64),
            b_out=np.asarray(s["b_out"], dtype=np.float64),
            omega0=float(s["omega0"]),
        )
        heads = ProjectionHeads(
            gamma=tuple(
                tuple(
                    AffineMap(np.asarray(h["weight"], dtype=np.float64),
                              np.asarray(h["bias"], dtype=np.float64))
                    for h in layer["gamma"]
                )
                for layer in doc["heads"]
            ),
            beta=tuple(
                AffineMap(np.asarray(layer["beta"]["weight"], dtype=np.float64),
                          np.asarray(layer["beta"]["bias"], dtype=np.float64))
                for layer in doc["heads"]
            ),
        )
        kwargs = {}
        if doc["mode"] == "encoder":
            e = doc["encoder"]
            kwargs["encoder"] = ContextEncoder(
                E_qry=np.asarray(e["E_qry"], dtype=np.float64),
                V1=np.asarray(e["V1"], dtype=np.float64),
                c1=np.asarray(e["c1"], dtype=np.float64),
                V2=np.asarray(e["V2"], dtype=np.float64),
                c2=np.asarray(e["c2"], dtype=np.float64),
            )
        else:
            kwargs["latents"] = tuple(
                LatentBlock(Z=np.asarray(Z, dtype=np.float64)) for Z in doc["latents"]
            )
        return FieldModel(
            meta=meta, heads=heads, G=int(doc["G"]), d=int(doc["d"]),
            activation=doc["activation"], mode=doc["mode"], **kwargs,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError("data.malformed_checkpoint", repr(e)) from e
