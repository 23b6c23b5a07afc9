"""
Graph convolution over the token graph and the graph prompt.

    H' = sigma( D̃^{-1/2} Ã D̃^{-1/2} H Θ ),   Ã = A + I
"""

from typing import List, Sequence

from shared.config import DEFAULT_GCN_ACTIVATION, DEFAULT_GCN_LAYERS, DEFAULT_TOKEN_DIM
from shared.errors import ConfigError, DimensionError

from ..diffcore import Module, Tensor, glorot_uniform, ops
from .graph import propagation_matrix

GCN_ACTIVATIONS = ("relu", "identity")


class GraphConvolution(Module):
    """GcnParams: Θ[D × D] and the activation."""

    def __init__(self, dim: int = DEFAULT_TOKEN_DIM, activation: str = DEFAULT_GCN_ACTIVATION,
                 master_seed: int = 0, name: str = "gcn"):
        super().__init__()
        if activation not in GCN_ACTIVATIONS:
            raise ConfigError(f"unknown GCN activation {activation!r}", key="graph.activation")
        self.activation = activation
        self.theta = self.add_parameter("theta", glorot_uniform((dim, dim), f"{name}.theta", master_seed))


def gcn_forward(A, H: Tensor, params: GraphConvolution) -> Tensor:
    """
    One graph convolution.

    Raises:
        DimensionError: A is not N×N for the N rows of H
    """
    P = propagation_matrix(A)
    if P.shape[0] != H.shape[0]:
        raise DimensionError("gcn_forward", P.shape, H.shape)
    out = ops.matmul(ops.matmul(P, H), params.theta)
    return ops.ACTIVATIONS[params.activation](out)


def gcn_stack(A, H: Tensor, layers: Sequence[GraphConvolution]) -> Tensor:
    for layer in layers:
        H = gcn_forward(A, H, layer)
    return H


class GraphPrompt(Module):
    """Stack of graph convolutions producing the prompted tokens."""

    def __init__(self, dim: int = DEFAULT_TOKEN_DIM, layers: int = DEFAULT_GCN_LAYERS,
                 activation: str = DEFAULT_GCN_ACTIVATION, residual: bool = False,
                 master_seed: int = 0, name: str = "graph"):
        super().__init__()
        if layers < 1:
            raise ConfigError(f"graph prompt needs at least one layer, got {layers}", key="graph.layers")
        self.residual = residual
        self.layers: List[GraphConvolution] = [
            self.add_module(f"layer{i}", GraphConvolution(dim, activation, master_seed, f"{name}.layer{i}"))
            for i in range(layers)
        ]


def prompt_tokens(A, weighted_tokens: Tensor, prompt: GraphPrompt) -> Tensor:
    """T^G = F_GCN(A, T̃), plus T̃ when the residual fuse is on."""
    out = gcn_stack(A, weighted_tokens, prompt.layers)
    return ops.add(out, weighted_tokens) if prompt.residual else out
