"""
synthgen: deterministic planted-signal datasets and matching concept banks.
"""

from .concepts import OCTANTS, REGION_LEXICON, TEMPLATES, class_names, synth_concepts
from .generator import (
    SynthSpec, ball_mask, generate, lesion_map, load_spec, modality_sign, subject_volumes,
)

__all__ = [
    "OCTANTS", "REGION_LEXICON", "TEMPLATES", "class_names", "synth_concepts",
    "SynthSpec", "ball_mask", "generate", "lesion_map", "load_spec", "modality_sign",
    "subject_volumes",
]
