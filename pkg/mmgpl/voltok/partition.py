"""
Patch partitioning strategies for volumetric modalities.

Three strategies cut an (H, W, D, C) volume into flat patch vectors:

- ``cube3d``: non-overlapping S×S×S cubes, N = HWD/S³, length S³·C
- ``axial2d``: every axial slice (fixed d) cut into S×S tiles, N = D·(H/S)(W/S), length S²·C
- ``slice2d``: as axial2d but slicing along a configured axis (0=H, 1=W, 2=D)

Patches are ordered slice-major, then row-major in plane; cubes are ordered
row-major over their (h, w, d) block indices.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from shared.config import (
    ALLOWED_PATCH_SIZES, DEFAULT_PATCH_SIZE, DEFAULT_PATCH_STRATEGY, DEFAULT_SLICE_AXIS,
)
from shared.errors import DimensionError, PartitionError

from .volume import Volume

AXIS_NAMES = ("H", "W", "D")

Origin = Tuple[int, int, int, int]  # (modality_id, h, w, d)


class PatchVariant(str, Enum):
    SLICE2D = "slice2d"
    AXIAL2D = "axial2d"
    CUBE3D = "cube3d"


class PatchStrategy(BaseModel):
    """How to cut volumes into patches."""
    variant: PatchVariant = Field(default=PatchVariant(DEFAULT_PATCH_STRATEGY))
    patch_size: int = Field(default=DEFAULT_PATCH_SIZE, gt=0, description="S, edge length")
    slice_axis: int = Field(default=DEFAULT_SLICE_AXIS, ge=0, le=2,
                            description="Slicing axis for slice2d")
    strict_sizes: bool = Field(default=False,
                               description="Restrict S to the published sweep values")

    @model_validator(mode="after")
    def _check_sweep(self) -> "PatchStrategy":
        if self.strict_sizes and self.patch_size not in ALLOWED_PATCH_SIZES:
            raise ValueError(f"patch_size must be one of {ALLOWED_PATCH_SIZES}")
        return self

    def cut_axes(self) -> Tuple[int, ...]:
        """Spatial axes that must be divisible by S."""
        if self.variant == PatchVariant.CUBE3D:
            return (0, 1, 2)
        if self.variant == PatchVariant.AXIAL2D:
            return (0, 1)
        return tuple(a for a in (0, 1, 2) if a != self.slice_axis)

    def slicing_axis(self) -> int:
        return 2 if self.variant == PatchVariant.AXIAL2D else self.slice_axis

    def patch_length(self, channels: int) -> int:
        s = self.patch_size
        return (s ** 3 if self.variant == PatchVariant.CUBE3D else s ** 2) * channels

    def patch_count(self, dims: Tuple[int, int, int]) -> int:
        s = self.patch_size
        if self.variant == PatchVariant.CUBE3D:
            return (dims[0] // s) * (dims[1] // s) * (dims[2] // s)
        in_plane = [dims[a] // s for a in self.cut_axes()]
        return dims[self.slicing_axis()] * in_plane[0] * in_plane[1]


@dataclass
class PatchSet:
    """Flat patch vectors of one modality plus the voxel offset of each patch."""
    modality_id: int
    patches: np.ndarray  # [N × patch_length]
    origins: List[Origin] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.patches.shape[0])


def check_divisible(dims: Tuple[int, ...], strat: PatchStrategy) -> None:
    for axis in strat.cut_axes():
        if dims[axis] % strat.patch_size != 0:
            raise PartitionError(AXIS_NAMES[axis], dims[axis], strat.patch_size)


def _slab_order(strat: PatchStrategy) -> Tuple[int, int, int]:
    """Spatial axes ordered (slicing axis, in-plane row, in-plane column)."""
    a = strat.slicing_axis()
    rest = [x for x in (0, 1, 2) if x != a]
    return (a, rest[0], rest[1])


def partition(v: Volume, strat: PatchStrategy) -> PatchSet:
    """
    Cut ``v`` into flat patches.

    Raises:
        PartitionError: a cut axis is not divisible by S
    """
    h, w, d, c = v.dims
    check_divisible((h, w, d), strat)
    s = strat.patch_size
    x = v.voxels

    if strat.variant == PatchVariant.CUBE3D:
        nh, nw, nd = h // s, w // s, d // s
        blocks = x.reshape(nh, s, nw, s, nd, s, c).transpose(0, 2, 4, 1, 3, 5, 6)
        patches = blocks.reshape(nh * nw * nd, s * s * s * c)
        origins = [(v.modality_id, i * s, j * s, k * s)
                   for i in range(nh) for j in range(nw) for k in range(nd)]
        return PatchSet(v.modality_id, np.ascontiguousarray(patches), origins)

    order = _slab_order(strat)
    moved = x.transpose(order + (3,))  # (slices, rows, cols, C)
    n_slices, rows, cols = moved.shape[:3]
    nr, nc = rows // s, cols // s
    tiles = moved.reshape(n_slices, nr, s, nc, s, c).transpose(0, 1, 3, 2, 4, 5)
    patches = tiles.reshape(n_slices * nr * nc, s * s * c)
    origins: List[Origin] = []
    for k in range(n_slices):
        for i in range(nr):
            for j in range(nc):
                offset = [0, 0, 0]
                offset[order[0]] = k
                offset[order[1]] = i * s
                offset[order[2]] = j * s
                origins.append((v.modality_id, offset[0], offset[1], offset[2]))
    return PatchSet(v.modality_id, np.ascontiguousarray(patches), origins)


def assemble(patch_set: PatchSet, strat: PatchStrategy, dims: Tuple[int, int, int, int]) -> Volume:
    """Inverse of ``partition``: place each patch back at its origin."""
    h, w, d, c = dims
    s = strat.patch_size
    expected = strat.patch_length(c)
    if patch_set.patches.ndim != 2 or patch_set.patches.shape[1] != expected:
        raise DimensionError("assemble", patch_set.patches.shape, (len(patch_set), expected))
    out = np.zeros((h, w, d, c), dtype=np.float32)
    for vec, (_, oh, ow, od) in zip(patch_set.patches, patch_set.origins):
        if strat.variant == PatchVariant.CUBE3D:
            out[oh:oh + s, ow:ow + s, od:od + s, :] = vec.reshape(s, s, s, c)
            continue
        order = _slab_order(strat)
        index = [slice(None)] * 3
        starts = (oh, ow, od)
        index[order[0]] = starts[order[0]]
        index[order[1]] = slice(starts[order[1]], starts[order[1]] + s)
        index[order[2]] = slice(starts[order[2]], starts[order[2]] + s)
        tile = vec.reshape(s, s, c)
        # integer index on the slicing axis drops it; remaining axes keep (rows, cols) order
        out[tuple(index) + (slice(None),)] = tile
    return Volume(modality_id=patch_set.modality_id, voxels=out)
