"""
Metrics Exporter

CSV tables for ablation runs and summaries, per-subject prediction tables
and JSON-lines records.
"""

import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import pandas as pd

from ..trainer import MetricsReport, Predictions


def predictions_table(preds: Predictions, class_names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """subject_id, label, prediction, inferred, then one probability column per class."""
    scores = preds.score_matrix()
    n_classes = scores.shape[1] if scores.size else len(class_names or [])
    names = list(class_names) if class_names else [str(c) for c in range(n_classes)]
    frame = pd.DataFrame({
        "subject_id": preds.subject_ids,
        "label": preds.labels,
        "prediction": preds.predictions,
        "inferred": preds.inferred,
    })
    for c, name in enumerate(names):
        frame[f"p_{name}"] = scores[:, c] if scores.size else []
    return frame


def report_row(report: MetricsReport) -> str:
    """``acc,auc,spe,sen,f1`` header plus one value line."""
    return pd.DataFrame([report.to_dict()]).to_csv(index=False, float_format="%.6f")


class MetricsExporter:
    """
    Writes metric tables into one output directory.

    Files: runs.csv, summary.csv (ablations), predictions.csv (eval).
    """

    def __init__(self, output_dir: str = "results"):
        self.output_dir = Path(output_dir)

    def _path(self, name: str) -> Path:
        filepath = self.output_dir / name
        filepath.parent.mkdir(exist_ok=True, parents=True)
        return filepath

    def export_runs(self, runs: pd.DataFrame, name: str = "runs.csv") -> str:
        filepath = self._path(name)
        runs.to_csv(filepath, index=False)
        return str(filepath)

    def export_summary(self, summary: pd.DataFrame, name: str = "summary.csv") -> str:
        filepath = self._path(name)
        summary.to_csv(filepath, index=False)
        return str(filepath)

    def export_per_arm(self, runs: pd.DataFrame, by: str = "arm") -> List[str]:
        """One runs CSV per arm (or modality choice)."""
        paths = []
        for key, group in runs.groupby(by, sort=False):
            paths.append(self.export_runs(group, f"runs_{key}.csv"))
        return paths

    def export_predictions(self, preds: Predictions, class_names: Optional[Sequence[str]] = None,
                           output_path: Optional[str] = None) -> str:
        filepath = Path(output_path) if output_path else self._path("predictions.csv")
        filepath.parent.mkdir(exist_ok=True, parents=True)
        predictions_table(preds, class_names).to_csv(filepath, index=False)
        return str(filepath)

    def export_jsonl(self, records: Iterable[Dict], name: str) -> str:
        filepath = self._path(name)
        with open(filepath, "w", encoding="utf-8") as f:
            for record in records:
                f.write(json.dumps(record) + "\n")
        return str(filepath)
