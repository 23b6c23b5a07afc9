"""
Training and inference loops.

Subjects are independent graphs with their own token counts, so a batch is
emulated by running one taped forward/backward per subject, each loss scaled
by 1/B, and stepping the optimizer once per batch.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from shared.errors import NonFiniteLossError

from ..config import TrainConfig
from ..dataset import Subject
from ..diffcore import Tape, ops
from ..model import MMGPLModel
from .optim import AdamW, lr_at

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Predictions:
    subject_ids: List[str] = field(default_factory=list)
    labels: List[int] = field(default_factory=list)
    predictions: List[int] = field(default_factory=list)
    inferred: List[int] = field(default_factory=list)
    probabilities: List[np.ndarray] = field(default_factory=list)

    def score_matrix(self) -> np.ndarray:
        return np.stack(self.probabilities) if self.probabilities else np.zeros((0, 0))


def subject_loss(model: MMGPLModel, subject: Subject):
    """Cross-entropy of one subject's class logits against its label."""
    result = model.forward(subject.volumes, label=subject.label)
    logits = ops.reshape(result.logits, (1, result.logits.shape[0]))
    return ops.cross_entropy(logits, [subject.label])


def train_model(
    model: MMGPLModel,
    subjects: Sequence[Subject],
    config: TrainConfig,
    log_path: Optional[Union[str, Path]] = None,
    show_progress: bool = False
) -> List[EpochRecord]:
    """
    Optimize ``model`` on ``subjects`` for ``config.epochs`` epochs.

    Returns:
        One EpochRecord per epoch (mean per-subject training loss)

    Raises:
        NonFiniteLossError: a subject loss became NaN or infinite
    """
    model.train()
    optimizer = AdamW(model.trainable_parameters(), config.base_lr, config.weight_decay)
    rng = np.random.default_rng([config.seed, len(subjects)])
    log_file = None
    if log_path:
        Path(log_path).parent.mkdir(exist_ok=True, parents=True)
        log_file = open(log_path, "w", encoding="utf-8")

    history: List[EpochRecord] = []
    try:
        epochs = tqdm(range(config.epochs), desc="epochs", disable=not show_progress)
        for epoch in epochs:
            lr = lr_at(epoch, config)
            order = rng.permutation(len(subjects))
            total = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = [subjects[i] for i in order[start:start + config.batch_size]]
                model.zero_grad()
                for subject in batch:
                    with Tape() as tape:
                        loss = subject_loss(model, subject)
                        scaled = ops.scale(loss, 1.0 / len(batch))
                    value = loss.item()
                    if not math.isfinite(value):
                        raise NonFiniteLossError(epoch, value)
                    tape.backward(scaled)
                    total += value
                optimizer.step(lr)
            record = EpochRecord(epoch=epoch, lr=lr, train_loss=total / max(len(subjects), 1))
            history.append(record)
            logger.info(f"epoch {epoch}: lr={lr:g} train_loss={record.train_loss:.6f}")
            if log_file:
                log_file.write(json.dumps(record.to_dict()) + "\n")
                log_file.flush()
    finally:
        if log_file:
            log_file.close()
    return history


def predict(model: MMGPLModel, subjects: Sequence[Subject]) -> Predictions:
    """Label-free inference: the category is inferred from concept similarity."""
    model.eval()
    out = Predictions()
    for subject in subjects:
        result = model.forward(subject.volumes)
        out.subject_ids.append(subject.subject_id)
        out.labels.append(subject.label)
        out.predictions.append(result.prediction)
        out.inferred.append(result.chosen_category)
        out.probabilities.append(result.probabilities())
    return out
