"""
Token weights from concept mass.

    w_i = (sum_{j in concepts(c)} S_ij / sum_j S_ij) * C

Rows of S sum to one, so the denominator is one up to rounding; it is kept
so the formula stays literal and differentiable.
"""

from dataclasses import dataclass

import numpy as np

from shared.errors import DimensionError, LabelIndexError

from ..diffcore import Tensor, ops
from .similarity import SimilarityMatrix


@dataclass
class TokenWeights:
    w: Tensor  # [N]
    chosen_category: int

    def numpy(self) -> np.ndarray:
        return self.w.numpy()


def category_mass(S: SimilarityMatrix) -> np.ndarray:
    """Total similarity mass per category, summed over tokens: [C]."""
    per_concept = S.S.data.sum(axis=0)
    return per_concept.reshape(S.n_classes, S.k).sum(axis=1)


def token_weights(S: SimilarityMatrix, category: int) -> TokenWeights:
    """
    Weight each token by its similarity mass on ``category``'s concepts, times C.

    Raises:
        LabelIndexError: category outside [0, C)
    """
    if not 0 <= category < S.n_classes:
        raise LabelIndexError(category, S.n_classes)
    start, stop = category * S.k, (category + 1) * S.k
    mass = ops.sum(ops.narrow(S.S, 1, start, stop), axis=1)
    total = ops.sum(S.S, axis=1)
    w = ops.scale(ops.div(mass, total), S.n_classes)
    return TokenWeights(w=w, chosen_category=int(category))


def infer_category(S: SimilarityMatrix) -> int:
    """Category with the largest total mass; ties go to the lowest index."""
    return int(np.argmax(category_mass(S)))


def apply_weights(tokens: Tensor, weights: TokenWeights) -> Tensor:
    """Scale row i of ``tokens`` by w_i."""
    n = tokens.shape[0]
    if weights.w.shape != (n,):
        raise DimensionError("apply_weights", tokens.shape, weights.w.shape)
    return ops.mul(tokens, ops.reshape(weights.w, (n, 1)))
