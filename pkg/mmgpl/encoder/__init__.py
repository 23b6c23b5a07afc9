"""
encoder: unified transformer encoder and the concept-space head.
"""

from .transformer import (
    EncoderConfig, EncoderLayer, UnifiedEncoder, encode, encoder_layer, mhsa, mlp,
)
from .head import ClassifierHead, class_logits, concept_logits, loss

__all__ = [
    "EncoderConfig", "EncoderLayer", "UnifiedEncoder", "encode", "encoder_layer", "mhsa", "mlp",
    "ClassifierHead", "class_logits", "concept_logits", "loss",
]
