"""
Configuration Constants for MMGPL

This module centralizes magic numbers and default values. Typed, validated
configuration objects live next to the module that owns them; they take
their defaults from here.

Usage:
    from shared.config import DEFAULT_PATCH_SIZE, DEFAULT_TOKEN_DIM
"""

from typing import List, Tuple

# =============================================================================
# General Settings
# =============================================================================

SEED_ENV_VAR = "MMGPL_SEED"
DEFAULT_SEED = 0

# CLI exit codes
EXIT_OK = 0
EXIT_UNKNOWN_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NETWORK_ERROR = 4
EXIT_NUMERIC_ERROR = 5

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# =============================================================================
# diffcore
# =============================================================================

LAYERNORM_EPS = 1e-5
COSINE_MIN_NORM = 1e-12
GELU_COEFF = 0.044715

CHECKPOINT_MAGIC = b"MMGC"
CHECKPOINT_VERSION = 1

# =============================================================================
# voltok
# =============================================================================

VOLUME_MAGIC = b"MMGV"
VOLUME_VERSION = 1

DEFAULT_PATCH_STRATEGY = "cube3d"
DEFAULT_PATCH_SIZE = 16
ALLOWED_PATCH_SIZES: List[int] = [16, 24, 32, 64]
DEFAULT_SLICE_AXIS = 0
DEFAULT_TOKEN_DIM = 64

# =============================================================================
# concepts
# =============================================================================

DEFAULT_TEXT_DIM = 64
DEFAULT_HASH_SEED = 0x4D4D47504C  # "MMGPL"
CONCEPT_HTTP_TIMEOUT = 30.0  # seconds, no retries

# =============================================================================
# relevance / graphprompt / encoder
# =============================================================================

DEFAULT_SIMILARITY_TAU = 0.1
DEFAULT_GRAPH_TAU = 0.1
DEFAULT_HEAD_TAU = 0.1
DEFAULT_GCN_LAYERS = 1
DEFAULT_GCN_ACTIVATION = "relu"

DEFAULT_ENCODER_LAYERS = 2
DEFAULT_ENCODER_HEADS = 4
DEFAULT_MLP_HIDDEN = 128

# =============================================================================
# trainer
# =============================================================================

DEFAULT_EPOCHS = 100
DEFAULT_BASE_LR = 1e-4
DEFAULT_LR_DECAY = 0.2
DEFAULT_DECAY_EPOCHS: Tuple[int, ...] = (30, 60)
DEFAULT_BATCH_SIZE = 8
ALLOWED_BATCH_SIZES: List[int] = [4, 8, 16]
DEFAULT_WEIGHT_DECAY = 0.01
DEFAULT_FOLDS = 5
DEFAULT_REPEATS = 3

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Ablation arms: (use_weights, use_graph)
ARMS = {
    "B": (False, False),
    "BW": (True, False),
    "BG": (False, True),
    "BWG": (True, True),
}

METRIC_NAMES: List[str] = ["acc", "auc", "spe", "sen", "f1"]

# =============================================================================
# synthgen
# =============================================================================

DEFAULT_SYNTH_SUBJECTS = 200
DEFAULT_SYNTH_CLASSES = 3
DEFAULT_SYNTH_DIMS: Tuple[int, int, int] = (32, 32, 32)
DEFAULT_SYNTH_MODALITIES = 2
DEFAULT_SYNTH_CONCEPTS = 4
DEFAULT_LESION_RADIUS = 5
DEFAULT_SIGNAL_AMPLITUDE = 1.0
DEFAULT_NOISE_STD = 0.25

# =============================================================================
# exports
# =============================================================================

DEFAULT_EDGE_THRESHOLD = 0.0
