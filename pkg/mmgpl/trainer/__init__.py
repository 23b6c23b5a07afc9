"""
trainer: optimization, schedule, metrics, cross-validation and ablations.

Usage:
    from mmgpl.trainer import train_model, predict, evaluate, run_ablation

    history = train_model(model, dataset.subjects, cfg.train())
    preds = predict(model, test_subjects)
"""

from ..config import TrainConfig
from .optim import AdamW, OptimizerState, adamw_step, lr_at
from .metrics import MetricsReport, evaluate
from .loop import EpochRecord, Predictions, predict, subject_loss, train_model
from .cv import (
    RUN_COLUMNS, AblationResult, arm_config, cross_validate, kfold_split, modality_label,
    run_ablation, run_modality_ablation, summarize,
)

__all__ = [
    "TrainConfig",
    "AdamW", "OptimizerState", "adamw_step", "lr_at",
    "MetricsReport", "evaluate",
    "EpochRecord", "Predictions", "predict", "subject_loss", "train_model",
    "RUN_COLUMNS", "AblationResult", "arm_config", "cross_validate", "kfold_split",
    "modality_label", "run_ablation", "run_modality_ablation", "summarize",
]
