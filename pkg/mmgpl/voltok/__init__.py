"""
voltok: volumetric modalities to patch tokens.

Usage:
    from mmgpl.voltok import read_volume, PatchStrategy, partition

    volume = read_volume("subject_000/modality_0.mmgv")
    patches = partition(volume, PatchStrategy(variant="cube3d", patch_size=16))
"""

from .volume import Volume, read_volume, write_volume, encode_volume, decode_volume
from .partition import (
    AXIS_NAMES, Origin, PatchSet, PatchStrategy, PatchVariant, assemble, check_divisible,
    partition,
)
from .tokenizer import (
    ModalityLayout, MultimodalTokenizer, TokenLayout, TokenSequence, align, tokenize,
)

__all__ = [
    "Volume", "read_volume", "write_volume", "encode_volume", "decode_volume",
    "AXIS_NAMES", "Origin", "PatchSet", "PatchStrategy", "PatchVariant", "assemble",
    "check_divisible", "partition",
    "ModalityLayout", "MultimodalTokenizer", "TokenLayout", "TokenSequence", "align", "tokenize",
]
