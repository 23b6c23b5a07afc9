"""
Heat-map Exporter

Writes the token weights w of one subject as plot-ready data:
  - heatmap_<subject>.csv with one row per token (modality, token, h, w, d, weight)
  - per modality and axial slice, a binary PGM (P5) of the weight map at voxel
    resolution, each voxel taking the weight of the patch covering it, plus an
    anatomy PGM of the same slice to superimpose it on.
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from shared.errors import DimensionError

from ..model import ForwardResult
from ..voltok import Origin, PatchSet, PatchStrategy, Volume, assemble

logger = logging.getLogger(__name__)

HEATMAP_COLUMNS = ["modality", "token", "h", "w", "d", "weight"]


def write_pgm(path: Path, image: np.ndarray) -> None:
    """8-bit binary greymap; rows of ``image`` become PGM rows."""
    if image.ndim != 2:
        raise DimensionError("write_pgm", image.shape)
    pixels = np.ascontiguousarray(image, dtype=np.uint8)
    height, width = pixels.shape
    path.parent.mkdir(exist_ok=True, parents=True)
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path: Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, size, maxval, body = raw.split(b"\n", 3)
    width, height = (int(x) for x in size.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)


def to_grey(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    span = hi - lo
    if span <= 0:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = np.clip((values - lo) / span, 0.0, 1.0)
    return np.round(scaled * 255.0).astype(np.uint8)


def voxel_map(values: Sequence[float], origins: Sequence[Origin], strat: PatchStrategy,
              dims: Sequence[int]) -> np.ndarray:
    """Spread one value per token over the voxels its patch covers: [H × W × D]."""
    h, w, d = dims[:3]
    vals = np.asarray(values, dtype=np.float32)
    if len(vals) != len(origins):
        raise DimensionError("voxel_map", vals.shape, (len(origins),))
    patches = np.repeat(vals[:, None], strat.patch_length(1), axis=1)
    mid = origins[0][0] if origins else 0
    volume = assemble(PatchSet(mid, patches, list(origins)), strat, (h, w, d, 1))
    return volume.voxels[..., 0]


def token_at(origins: Sequence[Origin], strat: PatchStrategy, dims: Sequence[int],
             point: Sequence[int]) -> int:
    """Index (within ``origins``) of the patch covering voxel ``point``."""
    index = voxel_map(np.arange(len(origins)), origins, strat, dims)
    return int(index[tuple(point)])


def weight_range(maps: Dict[int, np.ndarray]) -> Tuple[float, float]:
    """Smallest and largest weight over every modality map of one subject."""
    if not maps:
        return 0.0, 0.0
    return min(float(m.min()) for m in maps.values()), max(float(m.max()) for m in maps.values())


class HeatmapExporter:
    """
    Exports relevance heat maps for one subject.

    Weights are min-max scaled to grey levels per subject, anatomy against
    each volume's own intensity range.
    """

    def __init__(self, output_dir: str = "exports", strategy: PatchStrategy = None):
        self.output_dir = Path(output_dir)
        self.strategy = strategy or PatchStrategy()

    def token_table(self, result: ForwardResult) -> pd.DataFrame:
        w = result.weights.numpy()
        rows = [
            {"modality": mid, "token": i, "h": oh, "w": ow, "d": od, "weight": float(w[i])}
            for i, (mid, oh, ow, od) in enumerate(result.sequence.patch_origins)
        ]
        return pd.DataFrame(rows, columns=HEATMAP_COLUMNS)

    def weight_maps(self, result: ForwardResult, volumes: Sequence[Volume]) -> Dict[int, np.ndarray]:
        """Voxel-resolution weight volume per modality."""
        w = result.weights.numpy()
        seq = result.sequence
        by_id = {v.modality_id: v for v in volumes}
        maps = {}
        for b in range(len(seq.modality_boundaries) - 1):
            block = seq.block(b)
            origins = seq.patch_origins[block]
            mid = origins[0][0]
            maps[mid] = voxel_map(w[block], origins, self.strategy, by_id[mid].dims)
        return maps

    def export(self, subject_id: str, result: ForwardResult, volumes: Sequence[Volume]) -> List[str]:
        """
        Write the token CSV and the per-slice PGMs.

        Args:
            subject_id: used in file names
            result: forward pass of the subject (eval mode)
            volumes: the subject's volumes, for anatomy slices and dims

        Returns:
            Paths of the created files, CSV first
        """
        out_dir = self.output_dir
        out_dir.mkdir(exist_ok=True, parents=True)
        csv_path = out_dir / f"heatmap_{subject_id}.csv"
        self.token_table(result).to_csv(csv_path, index=False)
        written = [str(csv_path)]

        maps = self.weight_maps(result, volumes)
        low, top = weight_range(maps)
        by_id = {v.modality_id: v for v in volumes}
        for mid, weight_map in maps.items():
            anatomy = by_id[mid].voxels[..., 0]
            lo, hi = float(anatomy.min()), float(anatomy.max())
            for z in range(weight_map.shape[2]):
                stem = f"{subject_id}_m{mid}_z{z:03d}"
                weight_path = out_dir / "slices" / f"{stem}_weight.pgm"
                anatomy_path = out_dir / "slices" / f"{stem}_anatomy.pgm"
                write_pgm(weight_path, to_grey(weight_map[:, :, z], low, top))
                write_pgm(anatomy_path, to_grey(anatomy[:, :, z], lo, hi))
                written.extend([str(weight_path), str(anatomy_path)])
        logger.info(f"Heat map for {subject_id}: {len(written)} files in {out_dir}")
        return written
