"""
relevance: concept similarity, token weights and weighted tokens.
"""

from .similarity import ConceptProjector, SimilarityMatrix, similarity
from .weights import TokenWeights, apply_weights, category_mass, infer_category, token_weights

__all__ = [
    "ConceptProjector", "SimilarityMatrix", "similarity",
    "TokenWeights", "apply_weights", "category_mass", "infer_category", "token_weights",
]
