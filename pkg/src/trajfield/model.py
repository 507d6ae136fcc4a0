"""Bundle of everything trainable: shared decoder, projection heads, and
either a context encoder or a table of per-chunk latents.

Parameters move between two representations: the structured dataclasses
(used for evaluation) and a flat {name: array} dict (used by the optimizer
and the gradient checker). Flat keys are dotted paths; iteration order is
always sorted, which keeps updates and serialization deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, StructureError
from .field import ModulatedField, SirenMeta, init_siren, modulate
from .hypermod import (
    ContextEncoder,
    LatentBlock,
    ProjectionHeads,
    allocate_tokens,
    auto_decoder_latents,
    encode_context,
    init_encoder,
    init_heads,
    project_modulation,
    token_count,
)

MODES = ("auto_decoder", "encoder")


@dataclass(frozen=True)
class FieldModel:
    meta: SirenMeta
    heads: ProjectionHeads
    G: int
    d: int
    activation: str = "sine"
    mode: str = "auto_decoder"
    encoder: Optional[ContextEncoder] = None
    latents: tuple = ()  # of LatentBlock, parallel to the training dataset

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("config.bad_value:mode", self.mode)
        if self.activation not in ("sine", "relu"):
            raise ConfigError("config.bad_value:activation", self.activation)
        if self.mode == "encoder" and self.encoder is None:
            raise StructureError("structure.bad_shape:model", "encoder mode without encoder")


def init_model(
    L: int = 3,
    widths=(64, 64, 64),
    D: int = 7,
    omega0: float = 30.0,
    G: int = 16,
    d: int = 32,
    context_dim: int = 0,
    num_chunks: int = 0,
    mode: str = "auto_decoder",
    activation: str = "sine",
    encoder_hidden: int = 64,
    seed: int = 0,
) -> FieldModel:
    """Fresh model whose every chunk field equals the shared prior.

    Head biases, encoder output layer, and latents start at zero, so both
    conditioning paths produce the identity modulation at step 0.
    """
    meta = init_siren(L, widths, D, omega0=omega0, seed=seed)
    heads = init_heads(meta, G, d, seed=seed + 1)
    Q = token_count(L, G)
    if mode == "encoder":
        if context_dim <= 0:
            raise ConfigError("config.bad_value:context_dim", "encoder mode needs context_dim > 0")
        enc = init_encoder(Q, d, context_dim, hidden=encoder_hidden, seed=seed + 2)
        return FieldModel(meta=meta, heads=heads, G=G, d=d, activation=activation,
                          mode="encoder", encoder=enc)
    lat = tuple(auto_decoder_latents(num_chunks, Q, d, seed=seed + 3))
    return FieldModel(meta=meta, heads=heads, G=G, d=d, activation=activation,
                      mode="auto_decoder", latents=lat)


def realize_field(model: FieldModel, context=None, chunk_index: Optional[int] = None) -> ModulatedField:
    """Instance field for one chunk: latent/context -> tokens -> modulation."""
    if model.mode == "encoder":
        if context is None:
            raise ConfigError("config.missing_key:context", "encoder mode needs a context vector")
        block = encode_context(model.encoder, context)
    else:
        if chunk_index is None:
            raise ConfigError("config.missing_key:chunk_index", "auto_decoder mode needs a chunk index")
        if not 0 <= chunk_index < len(model.latents):
            raise ConfigError("config.bad_value:chunk_index", f"{chunk_index} of {len(model.latents)}")
        block = model.latents[chunk_index]
    blocks = allocate_tokens(block, model.meta.L, model.G)
    mods = project_modulation(blocks, model.heads, model.meta, model.G)
    return modulate(model.meta, mods, activation=model.activation)


# ---------------------------------------------------------------------------
# Flat parameter dict <-> structured model.


def model_params(model: FieldModel) -> dict:
    """Copy all trainable arrays into a flat dict."""
    p = {}
    for i, (W, b) in enumerate(model.meta.layers):
        p[f"siren.W.{i}"] = W.copy()
        p[f"siren.b.{i}"] = b.copy()
    p["siren.w_out"] = model.meta.w_out.copy()
    p["siren.b_out"] = model.meta.b_out.copy()
    for i, (gheads, bhead) in enumerate(zip(model.heads.gamma, model.heads.beta)):
        for g, h in enumerate(gheads):
            p[f"heads.{i}.gamma.{g}.weight"] = h.weight.copy()
            p[f"heads.{i}.gamma.{g}.bias"] = h.bias.copy()
        p[f"heads.{i}.beta.weight"] = bhead.weight.copy()
        p[f"heads.{i}.beta.bias"] = bhead.bias.copy()
    if model.mode == "encoder":
        p["encoder.E_qry"] = model.encoder.E_qry.copy()
        p["encoder.V1"] = model.encoder.V1.copy()
        p["encoder.c1"] = model.encoder.c1.copy()
        p["encoder.V2"] = model.encoder.V2.copy()
        p["encoder.c2"] = model.encoder.c2.copy()
    else:
        for i, block in enumerate(model.latents):
            p[f"latents.{i}"] = block.Z.copy()
    return p


def with_params(model: FieldModel, p: dict) -> FieldModel:
    """Rebuild the structured model from a flat dict (inverse of model_params)."""
    from .hypermod import AffineMap

    L = model.meta.L
    layers = tuple((p[f"siren.W.{i}"], p[f"siren.b.{i}"]) for i in range(L))
    meta = SirenMeta(layers=layers, w_out=p["siren.w_out"], b_out=p["siren.b_out"],
                     omega0=model.meta.omega0)
    gamma = []
    beta = []
    for i in range(L):
        n_heads = len(model.heads.gamma[i])
        gamma.append(tuple(
            AffineMap(p[f"heads.{i}.gamma.{g}.weight"], p[f"heads.{i}.gamma.{g}.bias"])
            for g in range(n_heads)
        ))
        beta.append(AffineMap(p[f"heads.{i}.beta.weight"], p[f"heads.{i}.beta.bias"]))
    heads = ProjectionHeads(gamma=tuple(gamma), beta=tuple(beta))
    if model.mode == "encoder":
        enc = ContextEncoder(E_qry=p["encoder.E_qry"], V1=p["encoder.V1"], c1=p["encoder.c1"],
                             V2=p["encoder.V2"], c2=p["encoder.c2"])
        return replace(model, meta=meta, heads=heads, encoder=enc)
    lat = tuple(LatentBlock(Z=p[f"latents.{i}"]) for i in range(len(model.latents)))
    return replace(model, meta=meta, heads=heads, latents=lat)


def check_finite(p: dict) -> bool:
    return all(np.isfinite(v).all() for v in p.values())
