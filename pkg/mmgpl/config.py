"""
Run configuration.

A run configuration is a flat document of dotted keys ("graph.tau": 0.1).
Precedence: command-line flags > config file > MMGPL_SEED > built-in defaults.
Unknown keys are rejected, and each module's typed config validates its own
values.

Usage:
    from mmgpl.config import load_run_config, dump_run_config

    cfg = load_run_config("config/run_config.json", {"train.epochs": 10})
    print(dump_run_config(cfg))
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from shared.config import (
    ALLOWED_BATCH_SIZES, ARMS, DEFAULT_BASE_LR, DEFAULT_BATCH_SIZE, DEFAULT_DECAY_EPOCHS,
    DEFAULT_EDGE_THRESHOLD, DEFAULT_ENCODER_HEADS, DEFAULT_ENCODER_LAYERS, DEFAULT_EPOCHS,
    DEFAULT_FOLDS, DEFAULT_GCN_ACTIVATION, DEFAULT_GCN_LAYERS, DEFAULT_GRAPH_TAU,
    DEFAULT_HASH_SEED, DEFAULT_HEAD_TAU, DEFAULT_LR_DECAY, DEFAULT_MLP_HIDDEN, DEFAULT_PATCH_SIZE,
    DEFAULT_PATCH_STRATEGY, DEFAULT_REPEATS, DEFAULT_SEED, DEFAULT_SIMILARITY_TAU,
    DEFAULT_SLICE_AXIS, DEFAULT_TEXT_DIM, DEFAULT_TOKEN_DIM, DEFAULT_WEIGHT_DECAY, SEED_ENV_VAR,
)
from shared.errors import ConfigError

from .encoder import EncoderConfig
from .voltok import PatchStrategy

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Optimization, schedule and cross-validation settings."""
    epochs: int = Field(default=DEFAULT_EPOCHS, ge=1)
    base_lr: float = Field(default=DEFAULT_BASE_LR, gt=0)
    lr_decay: float = Field(default=DEFAULT_LR_DECAY, gt=0, le=1)
    decay_epochs: Tuple[int, ...] = Field(default=DEFAULT_DECAY_EPOCHS)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE)
    weight_decay: float = Field(default=DEFAULT_WEIGHT_DECAY, ge=0)
    seed: int = Field(default=DEFAULT_SEED)
    folds: int = Field(default=DEFAULT_FOLDS, ge=2)
    repeats: int = Field(default=DEFAULT_REPEATS, ge=1)
    arm: str = Field(default="BWG", description="Ablation arm: B, BW, BG or BWG")

    @field_validator("batch_size")
    @classmethod
    def _allowed_batch(cls, v: int) -> int:
        if v not in ALLOWED_BATCH_SIZES:
            raise ValueError(f"batch_size must be one of {ALLOWED_BATCH_SIZES}")
        return v

    @field_validator("arm")
    @classmethod
    def _known_arm(cls, v: str) -> str:
        if v not in ARMS:
            raise ValueError(f"arm must be one of {sorted(ARMS)}")
        return v

    @model_validator(mode="after")
    def _decay_inside_run(self) -> "TrainConfig":
        late = [e for e in self.decay_epochs if e >= self.epochs]
        if late:
            raise ValueError(f"decay epochs {late} are not below epochs={self.epochs}")
        return self

    @property
    def use_weights(self) -> bool:
        return ARMS[self.arm][0]

    @property
    def use_graph(self) -> bool:
        return ARMS[self.arm][1]


class RunConfig(BaseModel):
    """Every module default as one flat, validated document."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    seed: int = Field(default=DEFAULT_SEED)

    patch_strategy: str = Field(default=DEFAULT_PATCH_STRATEGY, alias="patch.strategy")
    patch_size: int = Field(default=DEFAULT_PATCH_SIZE, alias="patch.size")
    patch_slice_axis: int = Field(default=DEFAULT_SLICE_AXIS, alias="patch.slice_axis")
    token_dim: int = Field(default=DEFAULT_TOKEN_DIM, alias="token.dim")

    text_dim: int = Field(default=DEFAULT_TEXT_DIM, alias="text.dim")
    text_hash_seed: int = Field(default=DEFAULT_HASH_SEED, alias="text.hash_seed")

    relevance_tau: float = Field(default=DEFAULT_SIMILARITY_TAU, gt=0, alias="relevance.tau")

    graph_tau: float = Field(default=DEFAULT_GRAPH_TAU, gt=0, alias="graph.tau")
    graph_layers: int = Field(default=DEFAULT_GCN_LAYERS, ge=1, alias="graph.layers")
    graph_activation: str = Field(default=DEFAULT_GCN_ACTIVATION, alias="graph.activation")
    graph_topk: Optional[int] = Field(default=None, ge=1, alias="graph.topk")
    graph_residual: bool = Field(default=False, alias="graph.residual")

    encoder_layers: int = Field(default=DEFAULT_ENCODER_LAYERS, alias="encoder.layers")
    encoder_heads: int = Field(default=DEFAULT_ENCODER_HEADS, alias="encoder.heads")
    encoder_mlp_hidden: int = Field(default=DEFAULT_MLP_HIDDEN, alias="encoder.mlp_hidden")
    encoder_frozen: bool = Field(default=False, alias="encoder.frozen")

    head_tau: float = Field(default=DEFAULT_HEAD_TAU, gt=0, alias="head.tau")

    train_epochs: int = Field(default=DEFAULT_EPOCHS, alias="train.epochs")
    train_base_lr: float = Field(default=DEFAULT_BASE_LR, alias="train.base_lr")
    train_lr_decay: float = Field(default=DEFAULT_LR_DECAY, alias="train.lr_decay")
    train_decay_epochs: Tuple[int, ...] = Field(default=DEFAULT_DECAY_EPOCHS, alias="train.decay_epochs")
    train_batch_size: int = Field(default=DEFAULT_BATCH_SIZE, alias="train.batch_size")
    train_weight_decay: float = Field(default=DEFAULT_WEIGHT_DECAY, alias="train.weight_decay")
    train_folds: int = Field(default=DEFAULT_FOLDS, alias="train.folds")
    train_repeats: int = Field(default=DEFAULT_REPEATS, alias="train.repeats")
    train_arm: str = Field(default="BWG", alias="train.arm")

    data_modalities: Optional[List[int]] = Field(default=None, alias="data.modalities")
    data_manifest: Optional[str] = Field(default=None, alias="data.manifest")
    data_bank: Optional[str] = Field(default=None, alias="data.bank")
    export_edge_threshold: float = Field(default=DEFAULT_EDGE_THRESHOLD, alias="export.edge_threshold")

    concept_endpoint: Optional[str] = Field(default=None)
    concept_token: Optional[str] = Field(default=None)

    @model_validator(mode="after")
    def _validate_owners(self) -> "RunConfig":
        # each typed config raises its own ValidationError; surface it as a field error
        for build in (self.patch, self.encoder, self.train):
            try:
                build()
            except ValidationError as exc:
                first = exc.errors()[0]
                raise ValueError(f"{build.__name__}.{'.'.join(map(str, first['loc']))}: {first['msg']}")
        if self.graph_activation not in ("relu", "identity"):
            raise ValueError(f"graph.activation must be relu or identity, got {self.graph_activation!r}")
        return self

    # --- typed views for the owning modules ---
    def patch(self) -> PatchStrategy:
        return PatchStrategy(variant=self.patch_strategy, patch_size=self.patch_size,
                             slice_axis=self.patch_slice_axis)

    def encoder(self) -> EncoderConfig:
        return EncoderConfig(layers=self.encoder_layers, heads=self.encoder_heads,
                             dim=self.token_dim, mlp_hidden=self.encoder_mlp_hidden,
                             frozen=self.encoder_frozen)

    def train(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.train_epochs, base_lr=self.train_base_lr, lr_decay=self.train_lr_decay,
            decay_epochs=self.train_decay_epochs, batch_size=self.train_batch_size,
            weight_decay=self.train_weight_decay, seed=self.seed, folds=self.train_folds,
            repeats=self.train_repeats, arm=self.train_arm,
        )

    def with_values(self, **values: Any) -> "RunConfig":
        """Copy with fields replaced (field names or dotted keys), revalidated."""
        data = self.model_dump(by_alias=True)
        for key, value in values.items():
            fields = type(self).model_fields
            alias = fields[key].alias if key in fields else key
            data[alias or key] = value
        return RunConfig.model_validate(data)


def parse_override(text: str) -> Tuple[str, Any]:
    """Split ``key=value``; the value is parsed as YAML (numbers, lists, null)."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError:
        value = raw
    return key.strip(), value


def validate_run_config(data: Mapping[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(dict(data))
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(p) for p in first["loc"]) or None
        raise ConfigError(f"invalid configuration: {first['msg']}", key=key) from None


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """
    Build a RunConfig from defaults, MMGPL_SEED, an optional file and overrides.

    Raises:
        ConfigError: unreadable file, unknown key or invalid value
    """
    data: Dict[str, Any] = {}
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed:
        try:
            data["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}",
                              key=SEED_ENV_VAR) from None
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid JSON/YAML: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a key-value document")
        data.update(loaded)
    if overrides:
        data.update(overrides)
    cfg = validate_run_config(data)
    logger.debug(f"Run config: seed={cfg.seed} arm={cfg.train_arm} epochs={cfg.train_epochs}")
    return cfg


def dump_run_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(by_alias=True, mode="json"), indent=2)
