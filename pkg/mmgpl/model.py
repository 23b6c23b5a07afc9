"""
MMGPL model: tokenizer -> concept relevance -> graph prompt -> encoder -> head.

Usage:
    model = MMGPLModel(layout, embeddings, cfg)
    result = model.forward(subject.volumes, label=subject.label)   # training
    model.eval()
    result = model.forward(subject.volumes)                        # inference

In eval mode the subject's category comes from ``infer_category`` alone; passing
a label raises ``ContractError``.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from shared.errors import ContractError, FormatError

from .concepts import ConceptEmbeddings, embed_bank, load_bank
from .config import RunConfig, dump_run_config, validate_run_config
from .diffcore import Module, Tensor, load_checkpoint, save_checkpoint
from .encoder import ClassifierHead, UnifiedEncoder, class_logits, concept_logits, encode
from .graphprompt import AdjacencyMatrix, GraphPrompt, build_graph, prompt_tokens, sparsify_topk
from .relevance import (
    ConceptProjector, SimilarityMatrix, TokenWeights, apply_weights, infer_category, similarity,
    token_weights,
)
from .voltok import MultimodalTokenizer, TokenLayout, TokenSequence, Volume

logger = logging.getLogger(__name__)


@dataclass
class ForwardResult:
    logits: Tensor  # [C]
    concept_scores: Tensor  # [C·K]
    similarity: SimilarityMatrix
    weights: TokenWeights
    adjacency: AdjacencyMatrix
    chosen_category: int
    sequence: TokenSequence

    def probabilities(self) -> np.ndarray:
        z = self.logits.data.astype(np.float64)
        e = np.exp(z - z.max())
        return e / e.sum()

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.logits.data))


class MMGPLModel(Module):
    """The full pipeline with the two ablation toggles."""

    def __init__(self, layout: TokenLayout, embeddings: ConceptEmbeddings, config: RunConfig,
                 use_weights: Optional[bool] = None, use_graph: Optional[bool] = None):
        super().__init__()
        train_cfg = config.train()
        seed = config.seed
        self.config = config
        self.layout = layout
        self.embeddings = embeddings
        self.strategy = config.patch()
        self.use_weights = train_cfg.use_weights if use_weights is None else use_weights
        self.use_graph = train_cfg.use_graph if use_graph is None else use_graph
        self.training = True

        self.tokenizer = self.add_module("tokenizer", MultimodalTokenizer(
            layout, config.token_dim, seed, "tokenizer"))
        self.projector = self.add_module("projector", ConceptProjector(
            config.token_dim, embeddings.dim, seed, "projector"))
        self.graph = self.add_module("graph", GraphPrompt(
            config.token_dim, config.graph_layers, config.graph_activation,
            config.graph_residual, seed, "graph"))
        self.encoder = self.add_module("encoder", UnifiedEncoder(config.encoder(), seed, "encoder"))
        self.head = self.add_module("head", ClassifierHead(
            config.token_dim, embeddings.dim, config.head_tau, seed, "head"))

    def train(self) -> "MMGPLModel":
        self.training = True
        return self

    def eval(self) -> "MMGPLModel":
        self.training = False
        return self

    def forward(self, volumes: Sequence[Volume], label: Optional[int] = None) -> ForwardResult:
        if not self.training and label is not None:
            raise ContractError("a label reached token weighting in eval mode")
        cfg = self.config
        seq = self.tokenizer(volumes, self.strategy)
        sim = similarity(seq.tokens, self.embeddings, self.projector, cfg.relevance_tau)
        chosen = int(label) if label is not None else infer_category(sim)

        weights = token_weights(sim, chosen)
        tokens = apply_weights(seq.tokens, weights) if self.use_weights else seq.tokens

        adjacency = build_graph(sim, cfg.graph_tau)
        if cfg.graph_topk is not None:
            adjacency = sparsify_topk(adjacency, min(cfg.graph_topk, adjacency.n_tokens))
        prompted = prompt_tokens(adjacency, tokens, self.graph) if self.use_graph else tokens

        z = encode(prompted, self.encoder)
        scores = concept_logits(z, self.embeddings, self.head)
        logits = class_logits(scores, self.embeddings.n_classes, self.embeddings.k)
        return ForwardResult(
            logits=logits, concept_scores=scores, similarity=sim, weights=weights,
            adjacency=adjacency, chosen_category=chosen, sequence=seq,
        )

    __call__ = forward


# =============================================================================
# Persistence: MMGC checkpoint plus a JSON sidecar
# =============================================================================

def sidecar_path(ckpt_path: Union[str, Path]) -> Path:
    p = Path(ckpt_path)
    return p.with_name(p.name + ".json")


def save_model(path: Union[str, Path], model: MMGPLModel,
               extra: Optional[Dict[str, Any]] = None) -> str:
    """Write weights (MMGC) and ``<path>.json`` with config, layout and arm toggles."""
    out = save_checkpoint(path, model.named_parameters())
    meta = {
        "config": json.loads(dump_run_config(model.config)),
        "layout": model.layout.to_dict(),
        "use_weights": model.use_weights,
        "use_graph": model.use_graph,
    }
    meta.update(extra or {})
    sidecar_path(path).write_text(json.dumps(meta, indent=2), encoding="utf-8")
    logger.info(f"Saved checkpoint to {out}")
    return out


def read_sidecar(path: Union[str, Path]) -> Dict[str, Any]:
    side = sidecar_path(path)
    if not side.exists():
        raise FormatError("checkpoint sidecar missing", path=str(side))
    try:
        return json.loads(side.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"checkpoint sidecar is not valid JSON: {exc.msg}", path=str(side)) from None


def load_model(path: Union[str, Path], bank_path: Optional[Union[str, Path]] = None) -> MMGPLModel:
    """Rebuild the model described by the sidecar and load its weights (eval mode)."""
    meta = read_sidecar(path)
    config = validate_run_config(meta["config"])
    bank_file = bank_path or meta.get("bank") or config.data_bank
    if not bank_file:
        raise FormatError("checkpoint does not name a concept bank; pass --bank", path=str(path))
    embeddings = embed_bank(load_bank(bank_file), dim=config.text_dim, seed=config.text_hash_seed)
    model = MMGPLModel(TokenLayout.from_dict(meta["layout"]), embeddings, config,
                       use_weights=meta.get("use_weights"), use_graph=meta.get("use_graph"))
    model.load_state_dict(load_checkpoint(path))
    return model.eval()
