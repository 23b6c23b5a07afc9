"""
Deterministic text embedder for concept texts.

Words and word bigrams are hashed with a keyed 64-bit BLAKE2b into D buckets
with a ±1 sign each (feature hashing), then the vector is L2-normalized.
Texts sharing words land close together; the same text always yields the
same vector.

Usage:
    from mmgpl.concepts import embed_text, embed_bank

    z = embed_text("hippocampal atrophy present")
    embeddings = embed_bank(bank, dim=64)
"""

import hashlib
from dataclasses import dataclass
from typing import List

import numpy as np

from shared.config import DEFAULT_HASH_SEED, DEFAULT_TEXT_DIM
from shared.errors import DomainError, LabelIndexError
from shared.utils import split_words

from ..diffcore import Tensor
from .bank import ConceptBank


def _features(words: List[str]) -> List[str]:
    return words + [f"{a} {b}" for a, b in zip(words, words[1:])]


def _hash(feature: str, key: bytes) -> int:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def embed_text(text: str, dim: int = DEFAULT_TEXT_DIM, seed: int = DEFAULT_HASH_SEED) -> np.ndarray:
    """
    Embed ``text`` into a unit vector of length ``dim``.

    Raises:
        DomainError: empty text, or every feature cancelled out
    """
    words = split_words(text or "")
    if not words:
        raise DomainError(f"cannot embed empty text {text!r}")
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    vec = np.zeros(dim, dtype=np.float64)
    for feature in _features(words):
        h = _hash(feature, key)
        vec[h % dim] += 1.0 if (h >> 63) == 0 else -1.0
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise DomainError(f"hashed features of {text!r} cancel to a zero vector")
    return (vec / norm).astype(np.float32)


@dataclass(frozen=True)
class ConceptEmbeddings:
    """Z_cpt: one unit row per concept; row c·K + k holds concept k of category c."""
    Z: Tensor
    n_classes: int
    k: int
    class_names: tuple

    @property
    def n_concepts(self) -> int:
        return self.n_classes * self.k

    @property
    def dim(self) -> int:
        return int(self.Z.shape[1])

    def index(self, category: int, concept: int) -> int:
        if not 0 <= category < self.n_classes:
            raise LabelIndexError(category, self.n_classes)
        if not 0 <= concept < self.k:
            raise LabelIndexError(concept, self.k)
        return category * self.k + concept

    def rows_for(self, category: int) -> slice:
        """Row range of one category's concepts."""
        if not 0 <= category < self.n_classes:
            raise LabelIndexError(category, self.n_classes)
        return slice(category * self.k, (category + 1) * self.k)

    def category_of(self, row: int) -> int:
        return row // self.k


def embed_bank(bank: ConceptBank, dim: int = DEFAULT_TEXT_DIM,
               seed: int = DEFAULT_HASH_SEED) -> ConceptEmbeddings:
    """Embed every concept with its class name appended: ``concept + " " + class``."""
    rows = [
        embed_text(f"{text} {entry.name}", dim=dim, seed=seed)
        for entry in bank.classes
        for text in entry.concepts
    ]
    return ConceptEmbeddings(
        Z=Tensor(np.stack(rows)),
        n_classes=bank.n_classes,
        k=bank.k,
        class_names=tuple(bank.class_names),
    )
