"""
Graph Exporter

Token-concept similarity graph of one subject:
  - graph_edges_<subject>.csv: i, j, a_ij for every entry of A at or above the threshold
  - graph_nodes_<subject>.csv: token index, modality, patch origin and weight
  - similarity_<subject>.csv: the S matrix, one row per token, one column per concept
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from shared.config import DEFAULT_EDGE_THRESHOLD

from ..model import ForwardResult

logger = logging.getLogger(__name__)

EDGE_COLUMNS = ["i", "j", "a_ij"]


def concept_columns(class_names: Sequence[str], k: int) -> List[str]:
    return [f"{name}:{j}" for name in class_names for j in range(k)]


def edge_table(adjacency: np.ndarray, threshold: float = DEFAULT_EDGE_THRESHOLD) -> pd.DataFrame:
    """Entries of A with a_ij >= threshold, row-major."""
    i, j = np.nonzero(adjacency >= threshold)
    return pd.DataFrame({"i": i, "j": j, "a_ij": adjacency[i, j].astype(np.float64)},
                        columns=EDGE_COLUMNS)


class GraphExporter:
    """Exports A, S and the token nodes of one forward pass."""

    def __init__(self, output_dir: str = "exports", threshold: float = DEFAULT_EDGE_THRESHOLD):
        self.output_dir = Path(output_dir)
        self.threshold = threshold

    def export(self, subject_id: str, result: ForwardResult,
               class_names: Optional[Sequence[str]] = None) -> List[str]:
        """
        Args:
            subject_id: used in file names
            result: forward pass of the subject
            class_names: column labels for S (defaults to class indices)

        Returns:
            Paths of the edge, node and similarity CSVs
        """
        self.output_dir.mkdir(exist_ok=True, parents=True)
        sim = result.similarity
        names = list(class_names) if class_names else [str(c) for c in range(sim.n_classes)]

        edges = edge_table(result.adjacency.A.numpy(), self.threshold)
        edges_path = self.output_dir / f"graph_edges_{subject_id}.csv"
        edges.to_csv(edges_path, index=False)

        w = result.weights.numpy()
        nodes = pd.DataFrame([
            {"token": i, "modality": mid, "h": oh, "w": ow, "d": od, "weight": float(w[i])}
            for i, (mid, oh, ow, od) in enumerate(result.sequence.patch_origins)
        ])
        nodes_path = self.output_dir / f"graph_nodes_{subject_id}.csv"
        nodes.to_csv(nodes_path, index=False)

        s_frame = pd.DataFrame(sim.S.numpy().astype(np.float64),
                               columns=concept_columns(names, sim.k))
        s_frame.insert(0, "token", range(sim.n_tokens))
        s_path = self.output_dir / f"similarity_{subject_id}.csv"
        s_frame.to_csv(s_path, index=False)

        logger.info(f"Graph for {subject_id}: {len(edges)} edges >= {self.threshold}")
        return [str(edges_path), str(nodes_path), str(s_path)]
