"""From context to modulation coefficients.

A latent block Z of Q = L*(G+1) tokens is split into one block per hidden
layer: G weight tokens and one bias token. Per-(layer, group) affine heads
project weight tokens to contiguous row-bands of gamma; one affine head per
layer maps the bias token to beta. Z itself comes either from a small
context encoder (learnable query embeddings conditioned on a feature
vector) or from a table of directly trainable per-chunk latents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, StructureError
from .field import ModulationCoeffs, SirenMeta


def token_count(L: int, G: int) -> int:
    return L * (G + 1)


@dataclass(frozen=True)
class LatentBlock:
    """Q x d modulation latents."""

    Z: np.ndarray

    def __post_init__(self):
        Z = np.ascontiguousarray(self.Z, dtype=np.float64)
        if Z.ndim != 2:
            raise StructureError("structure.bad_shape:latents")
        if not np.isfinite(Z).all():
            raise StructureError("structure.non_finite:latents")
        object.__setattr__(self, "Z", Z)

    @property
    def Q(self) -> int:
        return self.Z.shape[0]

    @property
    def d(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class LayerTokens:
    weight_tokens: np.ndarray  # (G, d)
    bias_token: np.ndarray  # (d,)


def allocate_tokens(block: LatentBlock, L: int, G: int) -> list:
    """Partition Z row-wise into L blocks of G weight tokens + 1 bias token."""
    if block.Q != token_count(L, G):
        raise StructureError(
            "structure.bad_shape:latents",
            f"Q={block.Q} but L*(G+1)={token_count(L, G)}",
        )
    out = []
    for ell in range(L):
        base = ell * (G + 1)
        out.append(
            LayerTokens(
                weight_tokens=block.Z[base : base + G],
                bias_token=block.Z[base + G],
            )
        )
    return out


@dataclass(frozen=True)
class AffineMap:
    weight: np.ndarray  # (out, d)
    bias: np.ndarray  # (out,)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.weight @ x + self.bias


@dataclass(frozen=True)
class ProjectionHeads:
    """Per layer: G gamma heads (d -> (n_l/G)*n_{l-1}) and one beta head (d -> n_l)."""

    gamma: tuple  # gamma[l] is a tuple of G AffineMaps
    beta: tuple  # beta[l] is an AffineMap


def init_heads(meta: SirenMeta, G: int, d: int, seed: int = 0, weight_scale: float = 1.0) -> ProjectionHeads:
    """Head weights uniform on +-scale/sqrt(d), biases zero.

    Zero biases keep the step-0 modulation at identity whenever the tokens
    are zero; nonzero weights keep the token gradient alive (an all-zero
    head would pin zero-initialized latents at a stationary point).
    """
    rng = np.random.default_rng(seed)
    bound = weight_scale / np.sqrt(d)
    gamma_layers = []
    beta_layers = []
    prev = 1
    for W, _ in meta.layers:
        n = W.shape[0]
        if n % G != 0:
            raise ConfigError("config.bad_value:G", f"width {n} not divisible by G={G}")
        out_size = (n // G) * prev
        gamma_layers.append(
            tuple(
                AffineMap(rng.uniform(-bound, bound, size=(out_size, d)), np.zeros(out_size))
                for _ in range(G)
            )
        )
        beta_layers.append(AffineMap(rng.uniform(-bound, bound, size=(n, d)), np.zeros(n)))
        prev = n
    return ProjectionHeads(gamma=tuple(gamma_layers), beta=tuple(beta_layers))


def zero_heads(meta: SirenMeta, G: int, d: int) -> ProjectionHeads:
    """All-zero heads: every modulation they produce is the identity."""
    heads = init_heads(meta, G, d, seed=0, weight_scale=0.0)
    return heads


def project_modulation(blocks: list, heads: ProjectionHeads, meta: SirenMeta, G: int) -> ModulationCoeffs:
    """Assemble gamma/beta for every hidden layer from the token blocks.

    Group g of layer l fills gamma rows [g*(n_l/G), (g+1)*(n_l/G)).
    """
    if len(blocks) != meta.L or len(heads.gamma) != meta.L:
        raise StructureError("structure.bad_shape:heads layer count")
    gammas = []
    betas = []
    for tokens, gheads, bhead, (W, b) in zip(blocks, heads.gamma, heads.beta, meta.layers):
        n, prev = W.shape
        rows_per_group = n // G
        pieces = []
        for g, head in enumerate(gheads):
            out = head(tokens.weight_tokens[g])
            if out.shape[0] != rows_per_group * prev:
                raise StructureError("structure.bad_shape:gamma head output")
            pieces.append(out.reshape(rows_per_group, prev))
        gamma = np.concatenate(pieces, axis=0)
        beta = bhead(tokens.bias_token)
        if beta.shape[0] != n:
            raise StructureError("structure.bad_shape:beta head output")
        gammas.append(gamma)
        betas.append(beta)
    return ModulationCoeffs(gamma=tuple(gammas), beta=tuple(betas))


@dataclass(frozen=True)
class ContextEncoder:
    """Learnable query embeddings + a two-layer map from (query, context) to Z.

    Each of the Q query rows is concatenated with the same broadcast context
    feature vector and pushed through tanh-hidden affine layers. With a
    zero output layer the encoder emits Z = 0, i.e. identity modulation.
    """

    E_qry: np.ndarray  # (Q, d)
    V1: np.ndarray  # (m, d + C)
    c1: np.ndarray  # (m,)
    V2: np.ndarray  # (d, m)
    c2: np.ndarray  # (d,)

    @property
    def context_dim(self) -> int:
        return self.V1.shape[1] - self.E_qry.shape[1]


def init_encoder(Q: int, d: int, C: int, hidden: int = 64, seed: int = 0) -> ContextEncoder:
    """Random embeddings and hidden layer; zero output layer (Z = 0 at init)."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d + C)
    return ContextEncoder(
        E_qry=rng.uniform(-1.0, 1.0, size=(Q, d)),
        V1=rng.uniform(-bound, bound, size=(hidden, d + C)),
        c1=np.zeros(hidden),
        V2=np.zeros((d, hidden)),
        c2=np.zeros(d),
    )


def encode_context(enc: ContextEncoder, c: np.ndarray) -> LatentBlock:
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (enc.context_dim,):
        raise StructureError(
            "structure.bad_shape:context",
            f"got {c.shape}, encoder expects ({enc.context_dim},)",
        )
    Q = enc.E_qry.shape[0]
    X = np.concatenate([enc.E_qry, np.tile(c, (Q, 1))], axis=1)
    hidden = np.tanh(X @ enc.V1.T + enc.c1)
    return LatentBlock(Z=hidden @ enc.V2.T + enc.c2)


def auto_decoder_latents(num_chunks: int, Q: int, d: int, seed: int = 0, scale: float = 0.0) -> list:
    """One trainable latent block per chunk; zero-initialized by default so
    every chunk starts at the shared prior."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(num_chunks):
        if scale == 0.0:
            Z = np.zeros((Q, d))
        else:
            Z = rng.normal(0.0, scale, size=(Q, d))
        out.append(LatentBlock(Z=Z))
    return out


# ---------------------------------------------------------------------------
# Graph builders (training path). Parameter Vars mirror the structures above.


def project_modulation_graph(Z: ad.Var, head_vars: list, L: int, G: int, widths: list):
    """Token allocation + head projection as autodiff ops.

    head_vars[l] = {"gamma": [(W, b), ... G of them], "beta": (W, b)}.
    Returns (gamma_vars, beta_vars) matching the hidden-layer shapes.
    """
    gammas = []
    betas = []
    prev = 1
    for ell in range(L):
        base = ell * (G + 1)
        n = widths[ell]
        rows_per_group = n // G
        pieces = []
        for g, (Wh, bh) in enumerate(head_vars[ell]["gamma"]):
            token = ad.reshape(ad.rows(Z, base + g, base + g + 1), (Z.shape[1],))
            out = ad.add(ad.matmul(Wh, token), bh)
            pieces.append(ad.reshape(out, (rows_per_group, prev)))
        gammas.append(ad.concat(pieces, axis=0))
        Wb, bb = head_vars[ell]["beta"]
        bias_token = ad.reshape(ad.rows(Z, base + G, base + G + 1), (Z.shape[1],))
        betas.append(ad.add(ad.matmul(Wb, bias_token), bb))
        prev = n
    return gammas, betas


def encode_context_graph(enc_vars: dict, c: np.ndarray) -> ad.Var:
    """Graph version of encode_context; `c` is a constant feature vector."""
    E = enc_vars["E_qry"]
    Q = E.shape[0]
    ctx = ad.Var(np.tile(np.asarray(c, dtype=np.float64), (Q, 1)))
    X = ad.concat([E, ctx], axis=1)
    hidden = ad.tanh(ad.add(ad.matmul(X, ad.transpose(enc_vars["V1"])), enc_vars["c1"]))
    return ad.add(ad.matmul(hidden, ad.transpose(enc_vars["V2"])), enc_vars["c2"])


def modulate_graph(meta_vars: dict, gammas: list, betas: list):
    """Effective parameters W*(1+gamma), b+beta as graph nodes."""
    weights = []
    biases = []
    for W, b, g, be in zip(meta_vars["W"], meta_vars["b"], gammas, betas):
        ones = ad.Var(np.ones(g.shape))
        weights.append(ad.mul(W, ad.add(ones, g)))
        biases.append(ad.add(b, be))
    return weights, biases
