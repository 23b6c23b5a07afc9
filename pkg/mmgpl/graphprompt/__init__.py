"""
graphprompt: concept-driven token graph and the GCN prompt.
"""

from .graph import AdjacencyMatrix, build_graph, propagation_matrix, sparsify_topk, topk_mask
from .gcn import (
    GCN_ACTIVATIONS, GraphConvolution, GraphPrompt, gcn_forward, gcn_stack, prompt_tokens,
)

__all__ = [
    "AdjacencyMatrix", "build_graph", "propagation_matrix", "sparsify_topk", "topk_mask",
    "GCN_ACTIVATIONS", "GraphConvolution", "GraphPrompt", "gcn_forward", "gcn_stack",
    "prompt_tokens",
]
