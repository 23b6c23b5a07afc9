"""
Cross-validation and ablation runners.

Every (repeat, fold) run trains a fresh model: repeat r uses seed
``config.seed + r`` both for the stratified split and for initialization.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import StratifiedKFold
from tqdm import tqdm

from shared.config import ARMS, METRIC_NAMES
from shared.errors import DataError

from ..concepts import ConceptEmbeddings
from ..config import RunConfig
from ..dataset import Dataset
from ..model import MMGPLModel
from ..voltok import TokenLayout
from .loop import predict, train_model
from .metrics import evaluate

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["arm", "fold", "repeat"] + METRIC_NAMES


def kfold_split(labels: Sequence[int], folds: int, seed: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Stratified k-fold split: disjoint test folds whose union is every index.

    Raises:
        DataError: fewer subjects than folds, or no class large enough to stratify
    """
    y = np.asarray(labels)
    if len(y) < folds:
        raise DataError(f"{len(y)} subjects cannot fill {folds} folds")
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    try:
        return [(train, test) for train, test in skf.split(np.zeros(len(y)), y)]
    except ValueError as exc:
        raise DataError(f"cannot stratify {len(y)} subjects into {folds} folds: {exc}",
                        details={"folds": folds}) from None


def arm_config(base: RunConfig, arm: str) -> RunConfig:
    """Copy of ``base`` that differs only in the arm (weights/graph toggles)."""
    if arm not in ARMS:
        raise DataError(f"unknown arm {arm!r}", details={"known": sorted(ARMS)})
    return base.with_values(**{"train.arm": arm})


def modality_label(modalities: Optional[Iterable[int]]) -> str:
    return "all" if modalities is None else "+".join(str(m) for m in modalities)


def cross_validate(
    dataset: Dataset,
    config: RunConfig,
    embeddings: ConceptEmbeddings,
    modalities: Optional[Sequence[int]] = None,
    show_progress: bool = False
) -> pd.DataFrame:
    """
    folds × repeats runs of one configuration.

    Returns:
        One row per run: arm, fold, repeat, acc, auc, spe, sen, f1
    """
    train_cfg = config.train()
    rows: List[Dict] = []
    runs = [(r, f) for r in range(train_cfg.repeats) for f in range(train_cfg.folds)]
    splits: Dict[int, List] = {}
    for repeat, fold in tqdm(runs, desc=f"cv[{train_cfg.arm}]", disable=not show_progress):
        seed = config.seed + repeat
        if repeat not in splits:
            splits[repeat] = kfold_split(dataset.labels, train_cfg.folds, seed)
        train_idx, test_idx = splits[repeat][fold]
        run_cfg = config.with_values(seed=seed)
        train_subjects = dataset.subset(train_idx)
        test_subjects = dataset.subset(test_idx)

        first = train_subjects[0].volumes
        if modalities is not None:
            first = [v for v in first if v.modality_id in modalities]
        layout = TokenLayout.from_volumes(first, run_cfg.patch())
        model = MMGPLModel(layout, embeddings, run_cfg)
        train_model(model, train_subjects, run_cfg.train())
        preds = predict(model, test_subjects)
        report = evaluate(preds.predictions, preds.score_matrix(), preds.labels, dataset.n_classes)
        logger.info(f"arm={train_cfg.arm} repeat={repeat} fold={fold} acc={report.acc:.4f}")
        rows.append({"arm": train_cfg.arm, "fold": fold, "repeat": repeat, **report.to_dict()})
    return pd.DataFrame(rows, columns=RUN_COLUMNS)


def summarize(runs: pd.DataFrame, by: Sequence[str] = ("arm",)) -> pd.DataFrame:
    """Mean and (population) std of every metric per group, as 'mean'/'std' rows."""
    keys = list(by)
    rows = []
    for key, group in runs.groupby(keys, sort=False):
        key = key if isinstance(key, tuple) else (key,)
        for stat, values in (("mean", group[METRIC_NAMES].mean()),
                             ("std", group[METRIC_NAMES].std(ddof=0))):
            rows.append({**dict(zip(keys, key)), "stat": stat, **values.to_dict()})
    return pd.DataFrame(rows, columns=keys + ["stat"] + METRIC_NAMES)


@dataclass
class AblationResult:
    runs: pd.DataFrame
    summary: pd.DataFrame


def run_ablation(
    dataset: Dataset,
    base_config: RunConfig,
    embeddings: ConceptEmbeddings,
    arms: Sequence[str] = tuple(ARMS),
    show_progress: bool = False
) -> AblationResult:
    """Cross-validate every arm; the arms differ only in the two toggles."""
    frames = []
    for arm in arms:
        logger.info(f"Ablation arm {arm}")
        frames.append(cross_validate(dataset, arm_config(base_config, arm), embeddings,
                                     modalities=base_config.data_modalities,
                                     show_progress=show_progress))
    runs = pd.concat(frames, ignore_index=True)
    return AblationResult(runs=runs, summary=summarize(runs, by=["arm"]))


def run_modality_ablation(
    dataset: Dataset,
    base_config: RunConfig,
    embeddings: ConceptEmbeddings,
    show_progress: bool = False
) -> AblationResult:
    """Full arm on each single modality, then on all modalities together."""
    modality_ids = sorted({v.modality_id for v in dataset.subjects[0].volumes})
    choices: List[List[int]] = [[m] for m in modality_ids]
    if len(modality_ids) > 1:
        choices.append(modality_ids)
    config = arm_config(base_config, "BWG")
    frames = []
    for chosen in choices:
        label = modality_label(chosen)
        logger.info(f"Modality ablation: {label}")
        frame = cross_validate(dataset, config, embeddings, modalities=chosen, show_progress=show_progress)
        frames.append(frame.assign(modalities=label))
    runs = pd.concat(frames, ignore_index=True)
    runs = runs[["modalities"] + RUN_COLUMNS]
    return AblationResult(runs=runs, summary=summarize(runs, by=["modalities"]))
