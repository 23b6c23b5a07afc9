"""
Multimodal tokenizer.

Each modality m has its own patch projection F_token^m and positional table
E^{m,pos}; a shared projection F_align and a modality table E^modality then
place every token in one space:

    t_i^m  = F_token^m(p_i^m) + E_i^{m,pos}
    t'_i^m = F_align(t_i^m) + E^modality_m

Usage:
    layout = TokenLayout.from_volumes(volumes, strategy)
    tokenizer = MultimodalTokenizer(layout, token_dim=64, master_seed=0)
    sequence = tokenizer(volumes, strategy)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from shared.config import DEFAULT_TOKEN_DIM
from shared.errors import DataError, DimensionError

from ..diffcore import Module, Tensor, as_tensor, glorot_uniform, ops, zeros
from .partition import Origin, PatchSet, PatchStrategy, partition
from .volume import Volume

logger = logging.getLogger(__name__)


@dataclass
class ModalityLayout:
    modality_id: int
    patch_length: int
    n_patches: int
    dims: tuple = ()

    def to_dict(self) -> dict:
        return {
            "modality_id": self.modality_id,
            "patch_length": self.patch_length,
            "n_patches": self.n_patches,
            "dims": list(self.dims),
        }


@dataclass
class TokenLayout:
    """Per-modality patch length and count, fixed for a model instance."""
    modalities: List[ModalityLayout] = field(default_factory=list)

    @classmethod
    def from_volumes(cls, volumes: Sequence[Volume], strat: PatchStrategy) -> "TokenLayout":
        entries = []
        for v in volumes:
            h, w, d, c = v.dims
            entries.append(ModalityLayout(
                modality_id=v.modality_id,
                patch_length=strat.patch_length(c),
                n_patches=strat.patch_count((h, w, d)),
                dims=v.dims,
            ))
        return cls(entries)

    @classmethod
    def from_dict(cls, data: Mapping) -> "TokenLayout":
        return cls([
            ModalityLayout(
                modality_id=int(m["modality_id"]),
                patch_length=int(m["patch_length"]),
                n_patches=int(m["n_patches"]),
                dims=tuple(m.get("dims", ())),
            )
            for m in data["modalities"]
        ])

    def to_dict(self) -> dict:
        return {"modalities": [m.to_dict() for m in self.modalities]}

    @property
    def modality_ids(self) -> List[int]:
        return [m.modality_id for m in self.modalities]

    @property
    def total_tokens(self) -> int:
        return sum(m.n_patches for m in self.modalities)

    def entry(self, modality_id: int) -> ModalityLayout:
        for m in self.modalities:
            if m.modality_id == modality_id:
                return m
        raise DataError(f"modality {modality_id} is not part of this token layout",
                        details={"modality_id": modality_id, "known": self.modality_ids})


@dataclass
class TokenSequence:
    """Aligned tokens of all modalities, concatenated in layout order."""
    tokens: Tensor
    patch_origins: List[Origin]
    modality_boundaries: List[int]

    def __len__(self) -> int:
        return int(self.tokens.shape[0])

    def block(self, index: int) -> slice:
        return slice(self.modality_boundaries[index], self.modality_boundaries[index + 1])


class MultimodalTokenizer(Module):
    """TokenizerParams: per-modality projection and positions, shared alignment."""

    def __init__(self, layout: TokenLayout, token_dim: int = DEFAULT_TOKEN_DIM,
                 master_seed: int = 0, name: str = "tokenizer"):
        super().__init__()
        self.layout = layout
        self.token_dim = token_dim
        self._row: Dict[int, int] = {}
        for row, m in enumerate(layout.modalities):
            self._row[m.modality_id] = row
            mid = m.modality_id
            self.add_parameter(f"proj_{mid}", glorot_uniform(
                (m.patch_length, token_dim), f"{name}.proj_{mid}", master_seed))
            self.add_parameter(f"proj_bias_{mid}", zeros((token_dim,), f"{name}.proj_bias_{mid}"))
            self.add_parameter(f"pos_{mid}", glorot_uniform(
                (m.n_patches, token_dim), f"{name}.pos_{mid}", master_seed))
        self.align_weight = self.add_parameter("align", glorot_uniform(
            (token_dim, token_dim), f"{name}.align", master_seed))
        self.align_bias = self.add_parameter("align_bias", zeros((token_dim,), f"{name}.align_bias"))
        self.modality_table = self.add_parameter("modality", glorot_uniform(
            (max(len(layout.modalities), 1), token_dim), f"{name}.modality", master_seed))

    def projection(self, modality_id: int):
        return (self._params[f"proj_{modality_id}"],
                self._params[f"proj_bias_{modality_id}"],
                self._params[f"pos_{modality_id}"])

    def modality_row(self, modality_id: int) -> int:
        if modality_id not in self._row:
            raise DataError(f"modality {modality_id} has no tokenizer parameters",
                            details={"modality_id": modality_id})
        return self._row[modality_id]

    def __call__(self, volumes: Sequence[Volume], strat: PatchStrategy) -> TokenSequence:
        by_id = {v.modality_id: v for v in volumes}
        missing = [mid for mid in self.layout.modality_ids if mid not in by_id]
        if missing:
            raise DataError(f"subject is missing modalities {missing}", details={"missing": missing})
        tokens: Dict[int, Tensor] = {}
        origins: Dict[int, List[Origin]] = {}
        for mid in self.layout.modality_ids:
            patch_set: PatchSet = partition(by_id[mid], strat)
            tokens[mid] = tokenize(patch_set.patches, self, mid)
            origins[mid] = patch_set.origins
        return align(tokens, self, origins)


def tokenize(patches, params: MultimodalTokenizer, modality_id: int) -> Tensor:
    """
    Project flat patches of one modality and add its positional table.

    Args:
        patches: [N_m × patch_length] array or tensor
        params: tokenizer holding F_token^m and E^{m,pos}
        modality_id: which modality's parameters to use

    Returns:
        Tensor[N_m × D_tok]
    """
    weight, bias, pos = params.projection(modality_id)
    x = as_tensor(patches)
    if x.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise DimensionError(f"tokenize[modality {modality_id}]", x.shape, weight.shape)
    if x.shape[0] != pos.shape[0]:
        raise DimensionError(f"tokenize[modality {modality_id}] positions", x.shape, pos.shape)
    return ops.add(ops.linear(x, weight, bias), pos)


def align(tokens_per_modality: Mapping[int, Tensor], params: MultimodalTokenizer,
          origins: Optional[Mapping[int, List[Origin]]] = None) -> TokenSequence:
    """Shared projection plus modality embedding, then concatenation in mapping order."""
    if not tokens_per_modality:
        raise DataError("align needs at least one modality", details={"modalities": []})
    blocks: List[Tensor] = []
    all_origins: List[Origin] = []
    boundaries = [0]
    for mid, t in tokens_per_modality.items():
        if t.ndim != 2 or t.shape[1] != params.token_dim:
            raise DimensionError("align", t.shape, (t.shape[0] if t.ndim else 0, params.token_dim))
        row = ops.gather_rows(params.modality_table, [params.modality_row(mid)])
        blocks.append(ops.add(ops.linear(t, params.align_weight, params.align_bias), row))
        boundaries.append(boundaries[-1] + t.shape[0])
        if origins is not None:
            all_origins.extend(origins[mid])
        else:
            # no voxel offsets known; record the token index in the h slot
            all_origins.extend((mid, i, 0, 0) for i in range(t.shape[0]))
    tokens = blocks[0] if len(blocks) == 1 else ops.concat(blocks, axis=0)
    logger.debug("aligned %d tokens over %d modalities", len(all_origins), len(blocks))
    return TokenSequence(tokens=tokens, patch_origins=all_origins, modality_boundaries=boundaries)
