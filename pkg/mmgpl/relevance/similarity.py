"""
Token-to-concept similarity.

    S_ij = softmax_j( cos(F_pro(t_i), Z_j) / tau_s )
"""

from dataclasses import dataclass

from shared.config import DEFAULT_SIMILARITY_TAU, DEFAULT_TEXT_DIM, DEFAULT_TOKEN_DIM
from shared.errors import DimensionError, DomainError

from ..concepts import ConceptEmbeddings
from ..diffcore import Module, Tensor, glorot_uniform, ops, zeros


class ConceptProjector(Module):
    """F_pro: token space to concept space."""

    def __init__(self, token_dim: int = DEFAULT_TOKEN_DIM, text_dim: int = DEFAULT_TEXT_DIM,
                 master_seed: int = 0, name: str = "projector"):
        super().__init__()
        self.weight = self.add_parameter("weight", glorot_uniform(
            (token_dim, text_dim), f"{name}.weight", master_seed))
        self.bias = self.add_parameter("bias", zeros((text_dim,), f"{name}.bias"))

    def __call__(self, tokens: Tensor) -> Tensor:
        return ops.linear(tokens, self.weight, self.bias)


@dataclass
class SimilarityMatrix:
    """S[N × C·K], row-stochastic over concepts."""
    S: Tensor
    tau: float
    n_classes: int
    k: int

    @property
    def n_tokens(self) -> int:
        return int(self.S.shape[0])


def similarity(tokens: Tensor, Z: ConceptEmbeddings, params: ConceptProjector,
               tau_s: float = DEFAULT_SIMILARITY_TAU) -> SimilarityMatrix:
    """
    Softmax over concepts of the cosine between projected tokens and concept rows.

    Raises:
        DomainError: tau_s <= 0, or a projected token has zero norm (index attached)
        DimensionError: projector output width differs from the concept width
    """
    if not tau_s > 0:
        raise DomainError(f"similarity temperature must be positive, got {tau_s}")
    projected = params(tokens)
    if projected.shape[1] != Z.dim:
        raise DimensionError("similarity", projected.shape, Z.Z.shape)
    cos = ops.cosine_rows(projected, Z.Z)
    S = ops.softmax(cos, axis=1, temperature=tau_s)
    return SimilarityMatrix(S=S, tau=tau_s, n_classes=Z.n_classes, k=Z.k)
