"""
Unified transformer encoder.

Pre-norm layers over the prompted tokens:

    H  = MHSA(LN(Z)) + Z
    Z' = MLP(LN(H)) + H,    MLP = linear -> GELU -> linear

The subject embedding is the mean of the final token rows.
"""

import math
from typing import List, Tuple, Union

from pydantic import BaseModel, Field, model_validator

from shared.config import (
    DEFAULT_ENCODER_HEADS, DEFAULT_ENCODER_LAYERS, DEFAULT_MLP_HIDDEN, DEFAULT_TOKEN_DIM,
)
from shared.errors import DimensionError

from ..diffcore import Module, Tensor, glorot_uniform, ones, ops, zeros


class EncoderConfig(BaseModel):
    layers: int = Field(default=DEFAULT_ENCODER_LAYERS, ge=0)
    heads: int = Field(default=DEFAULT_ENCODER_HEADS, ge=1)
    dim: int = Field(default=DEFAULT_TOKEN_DIM, ge=1, description="D_tok")
    mlp_hidden: int = Field(default=DEFAULT_MLP_HIDDEN, ge=1)
    frozen: bool = Field(default=False, description="Exclude encoder parameters from updates")

    @model_validator(mode="after")
    def _heads_divide_dim(self) -> "EncoderConfig":
        if self.dim % self.heads != 0:
            raise ValueError(f"heads ({self.heads}) must divide dim ({self.dim})")
        return self

    @property
    def head_dim(self) -> int:
        return self.dim // self.heads


class EncoderLayer(Module):
    def __init__(self, config: EncoderConfig, master_seed: int = 0, name: str = "encoder.layer0"):
        super().__init__()
        d, hidden = config.dim, config.mlp_hidden
        self.heads = config.heads
        self.head_dim = config.head_dim

        def dense(key: str, shape) -> Tensor:
            return self.add_parameter(key, glorot_uniform(shape, f"{name}.{key}", master_seed))

        def bias(key: str, size: int) -> Tensor:
            return self.add_parameter(key, zeros((size,), f"{name}.{key}"))

        self.ln1_gain = self.add_parameter("ln1_gain", ones((d,), f"{name}.ln1_gain"))
        self.ln1_bias = bias("ln1_bias", d)
        self.wq, self.bq = dense("wq", (d, d)), bias("bq", d)
        self.wk, self.bk = dense("wk", (d, d)), bias("bk", d)
        self.wv, self.bv = dense("wv", (d, d)), bias("bv", d)
        self.wo, self.bo = dense("wo", (d, d)), bias("bo", d)
        self.ln2_gain = self.add_parameter("ln2_gain", ones((d,), f"{name}.ln2_gain"))
        self.ln2_bias = bias("ln2_bias", d)
        self.w1, self.b1 = dense("w1", (d, hidden)), bias("b1", hidden)
        self.w2, self.b2 = dense("w2", (hidden, d)), bias("b2", d)


def mhsa(x: Tensor, layer: EncoderLayer,
         return_attention: bool = False) -> Union[Tensor, Tuple[Tensor, List[Tensor]]]:
    """
    Multi-head self-attention: per head softmax(Q Kᵀ / sqrt(d_k)) V, heads
    concatenated then output-projected.
    """
    if x.ndim != 2 or x.shape[1] != layer.wq.shape[0]:
        raise DimensionError("mhsa", x.shape, layer.wq.shape)
    q = ops.linear(x, layer.wq, layer.bq)
    k = ops.linear(x, layer.wk, layer.bk)
    v = ops.linear(x, layer.wv, layer.bv)
    dk = layer.head_dim
    heads, attention = [], []
    for h in range(layer.heads):
        lo, hi = h * dk, (h + 1) * dk
        qh, kh, vh = ops.narrow(q, 1, lo, hi), ops.narrow(k, 1, lo, hi), ops.narrow(v, 1, lo, hi)
        scores = ops.scale(ops.matmul(qh, ops.transpose(kh)), 1.0 / math.sqrt(dk))
        att = ops.softmax(scores, axis=1)
        attention.append(att)
        heads.append(ops.matmul(att, vh))
    merged = heads[0] if len(heads) == 1 else ops.concat(heads, axis=1)
    out = ops.linear(merged, layer.wo, layer.bo)
    return (out, attention) if return_attention else out


def mlp(x: Tensor, layer: EncoderLayer) -> Tensor:
    return ops.linear(ops.gelu(ops.linear(x, layer.w1, layer.b1)), layer.w2, layer.b2)


def encoder_layer(z_prev: Tensor, layer: EncoderLayer) -> Tensor:
    h = ops.add(mhsa(ops.layernorm(z_prev, layer.ln1_gain, layer.ln1_bias), layer), z_prev)
    return ops.add(mlp(ops.layernorm(h, layer.ln2_gain, layer.ln2_bias), layer), h)


class UnifiedEncoder(Module):
    """Stack of encoder layers; frozen encoders pass gradients but are never updated."""

    def __init__(self, config: EncoderConfig, master_seed: int = 0, name: str = "encoder"):
        super().__init__()
        self.config = config
        self.layers: List[EncoderLayer] = [
            self.add_module(f"layer{i}", EncoderLayer(config, master_seed, f"{name}.layer{i}"))
            for i in range(config.layers)
        ]
        if config.frozen:
            self.freeze()


def encode(T_G: Tensor, encoder: UnifiedEncoder) -> Tensor:
    """Run every layer, then mean-pool over tokens: z[D_tok]."""
    if T_G.ndim != 2 or T_G.shape[0] < 1:
        raise DimensionError("encode", T_G.shape)
    z = T_G
    for layer in encoder.layers:
        z = encoder_layer(z, layer)
    return ops.mean(z, axis=0)
