"""
Concept-flow Exporter

Sankey source data. Per subject the activated category is ``infer_category``
and the activated concept is the argmax of S summed over tokens. Counts are
emitted as a long table:

    kind,source,target,count
    category,<true class>,<activated category>,n
    concept,<true class>,<activated concept>,n
"""

import logging
from collections import Counter
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..concepts import ConceptBank
from ..dataset import Subject
from ..model import MMGPLModel

logger = logging.getLogger(__name__)

FLOW_COLUMNS = ["kind", "source", "target", "count"]


def concept_labels(model: MMGPLModel, bank: Optional[ConceptBank] = None) -> List[str]:
    """Concept texts when a bank is at hand, ``class:k`` otherwise."""
    if bank is not None:
        return [f"{entry.name}: {text}" for entry in bank.classes for text in entry.concepts]
    emb = model.embeddings
    return [f"{name}:{j}" for name in emb.class_names for j in range(emb.k)]


def concept_flows(model: MMGPLModel, subjects: Sequence[Subject],
                  bank: Optional[ConceptBank] = None, show_progress: bool = False) -> pd.DataFrame:
    """Run label-free inference on ``subjects`` and count activations per true class."""
    model.eval()
    names = list(model.embeddings.class_names)
    labels = concept_labels(model, bank)
    categories: Counter = Counter()
    concepts: Counter = Counter()
    for subject in tqdm(subjects, desc="flows", disable=not show_progress):
        result = model.forward(subject.volumes)
        source = names[subject.label]
        activated = int(np.argmax(result.similarity.S.numpy().sum(axis=0)))
        categories[(source, names[result.chosen_category])] += 1
        concepts[(source, labels[activated])] += 1

    rows = [{"kind": "category", "source": s, "target": t, "count": n}
            for (s, t), n in sorted(categories.items())]
    rows += [{"kind": "concept", "source": s, "target": t, "count": n}
             for (s, t), n in sorted(concepts.items())]
    return pd.DataFrame(rows, columns=FLOW_COLUMNS)


class FlowExporter:
    """Writes the concept-flow table as CSV."""

    def __init__(self, output_path: str = "exports/flows.csv"):
        self.output_path = Path(output_path)

    def export(self, flows: pd.DataFrame) -> str:
        self.output_path.parent.mkdir(exist_ok=True, parents=True)
        flows.to_csv(self.output_path, index=False)
        logger.info(f"Wrote {len(flows)} flow rows to {self.output_path}")
        return str(self.output_path)
