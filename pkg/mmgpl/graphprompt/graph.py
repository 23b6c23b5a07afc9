"""
Token graph from concept-similarity rows.

Tokens whose similarity distributions over concepts agree are connected
strongly:

    a_ij = softmax_j( cos(S_i, S_j) / tau_g )

The diagonal takes part in the softmax, so every row is a distribution.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from shared.config import DEFAULT_GRAPH_TAU
from shared.errors import DimensionError, DomainError

from ..diffcore import Tensor, as_tensor, ops
from ..relevance import SimilarityMatrix


@dataclass
class AdjacencyMatrix:
    """A[N × N], row-stochastic (rows renormalized after sparsification)."""
    A: Tensor
    tau: float
    topk: Optional[int] = None

    @property
    def n_tokens(self) -> int:
        return int(self.A.shape[0])


def _adjacency_tensor(adj) -> Tensor:
    return adj.A if isinstance(adj, AdjacencyMatrix) else as_tensor(adj)


def build_graph(S: Union[SimilarityMatrix, Tensor], tau_g: float = DEFAULT_GRAPH_TAU) -> AdjacencyMatrix:
    """
    Raises:
        DomainError: tau_g <= 0, or a zero similarity row
    """
    if not tau_g > 0:
        raise DomainError(f"graph temperature must be positive, got {tau_g}")
    rows = S.S if isinstance(S, SimilarityMatrix) else as_tensor(S)
    cos = ops.cosine_rows(rows, rows)
    return AdjacencyMatrix(A=ops.softmax(cos, axis=1, temperature=tau_g), tau=tau_g)


def topk_mask(a: np.ndarray, k: int) -> np.ndarray:
    """1 at the k largest entries of each row (ties to the lower column), else 0."""
    order = np.argsort(-a, axis=1, kind="stable")[:, :k]
    mask = np.zeros_like(a)
    np.put_along_axis(mask, order, 1.0, axis=1)
    return mask


def sparsify_topk(adj: AdjacencyMatrix, k: int) -> AdjacencyMatrix:
    """
    Keep the top-k entries per row and renormalize rows to sum to one.

    Raises:
        DomainError: k outside [1, N]
    """
    A = _adjacency_tensor(adj)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"topk must lie in [1, {n}], got {k}")
    kept = ops.mul(A, topk_mask(A.data, k))
    renorm = ops.div(kept, ops.sum(kept, axis=1, keepdims=True))
    tau = adj.tau if isinstance(adj, AdjacencyMatrix) else float("nan")
    return AdjacencyMatrix(A=renorm, tau=tau, topk=k)


def propagation_matrix(adj) -> Tensor:
    """D̃^{-1/2} (A + I) D̃^{-1/2} with D̃ the row-sum degree of A + I."""
    A = _adjacency_tensor(adj)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("propagation_matrix", A.shape)
    n = A.shape[0]
    a_tilde = ops.add(A, np.eye(n, dtype=A.data.dtype))
    degree = ops.sum(a_tilde, axis=1)
    bad = np.flatnonzero(degree.data <= 0)
    if bad.size:
        raise DomainError(f"non-positive degree at node {int(bad[0])}", index=int(bad[0]))
    dinv = ops.power(degree, -0.5)
    return ops.mul(ops.mul(a_tilde, ops.reshape(dinv, (n, 1))), ops.reshape(dinv, (1, n)))
