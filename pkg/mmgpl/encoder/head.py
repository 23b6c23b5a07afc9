"""
Concept-space classification head.

The subject embedding is projected into text space and compared with every
concept embedding (cosine over temperature); class logits average each
category's K concept scores.
"""

from typing import Sequence

from shared.config import DEFAULT_HEAD_TAU, DEFAULT_TEXT_DIM, DEFAULT_TOKEN_DIM
from shared.errors import DimensionError, DomainError

from ..concepts import ConceptEmbeddings
from ..diffcore import Module, Tensor, glorot_uniform, ops, zeros


class ClassifierHead(Module):
    def __init__(self, token_dim: int = DEFAULT_TOKEN_DIM, text_dim: int = DEFAULT_TEXT_DIM,
                 tau: float = DEFAULT_HEAD_TAU, master_seed: int = 0, name: str = "head"):
        super().__init__()
        if not tau > 0:
            raise DomainError(f"head temperature must be positive, got {tau}")
        self.tau = float(tau)
        self.weight = self.add_parameter("weight", glorot_uniform(
            (token_dim, text_dim), f"{name}.weight", master_seed))
        self.bias = self.add_parameter("bias", zeros((text_dim,), f"{name}.bias"))


def concept_logits(z: Tensor, Z: ConceptEmbeddings, head: ClassifierHead) -> Tensor:
    """cos(project(z), Z_j) / tau_h for every concept j: [C·K]."""
    d = z.shape[-1]
    projected = ops.linear(ops.reshape(z, (1, d)), head.weight, head.bias)
    if projected.shape[1] != Z.dim:
        raise DimensionError("concept_logits", projected.shape, Z.Z.shape)
    scores = ops.scale(ops.cosine_rows(projected, Z.Z), 1.0 / head.tau)
    return ops.reshape(scores, (Z.n_concepts,))


def class_logits(concept_scores: Tensor, n_classes: int, k: int) -> Tensor:
    """Mean of each category's K concept scores: [C]."""
    if concept_scores.size != n_classes * k:
        raise DimensionError("class_logits", concept_scores.shape, (n_classes * k,))
    return ops.mean(ops.reshape(concept_scores, (n_classes, k)), axis=1)


def loss(batch_logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Cross-entropy of [n × C] logits against integer labels."""
    return ops.cross_entropy(batch_logits, labels)
