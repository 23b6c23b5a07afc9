"""
Classification metrics: ACC plus macro-averaged AUC, SPE, SEN and F1.

Per class c (one-vs-rest):
    SEN = TP / (TP + FN)    SPE = TN / (TN + FP)
    F1  = 2·P·R / (P + R),  P = TP / (TP + FP), R = SEN
    AUC = Mann-Whitney rank statistic, ties count one half

Classes absent from the labels are left out of every macro average.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix, roc_auc_score

from shared.errors import DimensionError

logger = logging.getLogger(__name__)


@dataclass
class MetricsReport:
    acc: float
    auc: float
    spe: float
    sen: float
    f1: float
    excluded_classes: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, float]:
        data = asdict(self)
        data.pop("excluded_classes")
        return data


def _ratio(num: float, den: float) -> float:
    return float(num) / float(den) if den > 0 else 0.0


def evaluate(predictions: Sequence[int], scores, labels: Sequence[int],
             n_classes: Optional[int] = None) -> MetricsReport:
    """
    Args:
        predictions: predicted class per subject
        scores: [n × C] class scores (probabilities or logits) for AUC
        labels: true class per subject
        n_classes: C (defaults to the score width)
    """
    y = np.asarray(labels, dtype=np.int64)
    yhat = np.asarray(predictions, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != yhat.shape or s.ndim != 2 or s.shape[0] != y.shape[0]:
        raise DimensionError("evaluate", y.shape, yhat.shape, s.shape)
    c = n_classes or s.shape[1]
    cm = confusion_matrix(y, yhat, labels=list(range(c)))
    total = cm.sum()

    present, excluded = [], []
    for k in range(c):
        (present if cm[k].sum() > 0 else excluded).append(k)
    for k in excluded:
        logger.warning(f"class {k} absent from labels; excluded from macro averages")

    sen, spe, f1, auc = [], [], [], []
    for k in present:
        tp = cm[k, k]
        fn = cm[k].sum() - tp
        fp = cm[:, k].sum() - tp
        tn = total - tp - fn - fp
        recall = _ratio(tp, tp + fn)
        precision = _ratio(tp, tp + fp)
        sen.append(recall)
        spe.append(_ratio(tn, tn + fp))
        f1.append(_ratio(2 * precision * recall, precision + recall))
        positives = y == k
        if 0 < positives.sum() < len(y):
            auc.append(float(roc_auc_score(positives.astype(int), s[:, k])))

    return MetricsReport(
        acc=float(np.mean(y == yhat)) if len(y) else 0.0,
        auc=float(np.mean(auc)) if auc else 0.5,
        spe=float(np.mean(spe)) if spe else 0.0,
        sen=float(np.mean(sen)) if sen else 0.0,
        f1=float(np.mean(f1)) if f1 else 0.0,
        excluded_classes=excluded,
    )
