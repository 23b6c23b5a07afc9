"""
Planted-signal synthetic datasets.

Each subject of class c gets Gaussian background noise plus spherical blobs
at that class's lesion centres. Even modalities carry +amplitude, odd
modalities -amplitude, so the modalities are complementary. Labels are
assigned round-robin (subject i has label i mod C). Subject i draws from
its own stream SeedSequence([seed, i]), so output does not depend on the
number of workers.

Output layout:
    <out>/manifest.json
    <out>/concepts.json
    <out>/synth_spec.json
    <out>/subjects/s0000/modality_0.mmgv ...
    <out>/lesions/class_0.mmgv ...
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from shared.config import (
    DEFAULT_LESION_RADIUS, DEFAULT_NOISE_STD, DEFAULT_PATCH_SIZE, DEFAULT_SEED,
    DEFAULT_SIGNAL_AMPLITUDE, DEFAULT_SYNTH_CLASSES, DEFAULT_SYNTH_CONCEPTS, DEFAULT_SYNTH_DIMS,
    DEFAULT_SYNTH_MODALITIES, DEFAULT_SYNTH_SUBJECTS,
)
from shared.errors import SpecError

from ..concepts import save_bank
from ..dataset import DatasetManifest, SubjectEntry
from ..voltok import Volume, write_volume
from .concepts import OCTANTS, class_names, synth_concepts

logger = logging.getLogger(__name__)

Center = Tuple[int, int, int]


class SynthSpec(BaseModel):
    """Synthetic dataset description; centres default to one octant per class."""
    model_config = ConfigDict(extra="forbid")

    n_subjects: int = Field(default=DEFAULT_SYNTH_SUBJECTS, ge=1)
    n_classes: int = Field(default=DEFAULT_SYNTH_CLASSES, ge=2)
    dims: Tuple[int, int, int] = Field(default=DEFAULT_SYNTH_DIMS)
    n_modalities: int = Field(default=DEFAULT_SYNTH_MODALITIES, ge=1)
    n_concepts: int = Field(default=DEFAULT_SYNTH_CONCEPTS, ge=1, description="K concepts per class")
    lesion_centers: Optional[List[List[Center]]] = Field(default=None)
    lesion_radius: int = Field(default=DEFAULT_LESION_RADIUS, ge=0)
    signal_amplitude: float = Field(default=DEFAULT_SIGNAL_AMPLITUDE, ge=0)
    noise_std: float = Field(default=DEFAULT_NOISE_STD, ge=0)
    patch_size: int = Field(default=DEFAULT_PATCH_SIZE, ge=1)
    seed: int = Field(default=DEFAULT_SEED)

    @model_validator(mode="after")
    def _check(self) -> "SynthSpec":
        for axis, size in zip("HWD", self.dims):
            if size < 1 or size % self.patch_size != 0:
                raise SpecError(f"dim {axis}={size} is not divisible by patch size {self.patch_size}",
                                field="dims")
        if self.lesion_centers is None and self.n_classes > len(OCTANTS):
            raise SpecError(f"default centres cover at most {len(OCTANTS)} classes", field="n_classes")
        centers = self.centers()
        if len(centers) != self.n_classes:
            raise SpecError(f"{len(centers)} centre lists for {self.n_classes} classes",
                            field="lesion_centers")
        r = self.lesion_radius
        for c, points in enumerate(centers):
            for point in points:
                for axis, (value, size) in enumerate(zip(point, self.dims)):
                    if value - r < 0 or value + r >= size:
                        raise SpecError(
                            f"lesion of class {c} at {tuple(point)} with radius {r} leaves the volume "
                            f"on axis {'HWD'[axis]}", field="lesion_centers")
        return self

    def centers(self) -> List[List[Center]]:
        if self.lesion_centers is not None:
            return [[tuple(p) for p in pts] for pts in self.lesion_centers]
        return [[tuple(int((o + 0.5) * size / 2) for o, size in zip(OCTANTS[c], self.dims))]
                for c in range(self.n_classes)]

    def label_of(self, index: int) -> int:
        return index % self.n_classes


def ball_mask(dims: Tuple[int, int, int], center: Center, radius: int) -> np.ndarray:
    grid = np.ogrid[tuple(slice(0, s) for s in dims)]
    dist2 = sum((g - c) ** 2 for g, c in zip(grid, center))
    return dist2 <= radius * radius


def lesion_map(spec: SynthSpec, label: int) -> np.ndarray:
    """1 inside this class's blobs, 0 elsewhere."""
    mask = np.zeros(spec.dims, dtype=bool)
    for center in spec.centers()[label]:
        mask |= ball_mask(spec.dims, center, spec.lesion_radius)
    return mask.astype(np.float32)


def modality_sign(modality_id: int) -> float:
    return 1.0 if modality_id % 2 == 0 else -1.0


def subject_volumes(spec: SynthSpec, index: int) -> List[Volume]:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed & 0xFFFFFFFF, index]))
    signal = lesion_map(spec, spec.label_of(index)) * spec.signal_amplitude
    volumes = []
    for m in range(spec.n_modalities):
        noise = rng.normal(0.0, spec.noise_std, size=spec.dims) if spec.noise_std > 0 \
            else np.zeros(spec.dims)
        voxels = (noise + modality_sign(m) * signal).astype(np.float32)
        volumes.append(Volume(modality_id=m, voxels=voxels))
    return volumes


def _write_subject(spec: SynthSpec, root: Path, index: int) -> SubjectEntry:
    subject_id = f"s{index:04d}"
    paths = {}
    for volume in subject_volumes(spec, index):
        rel = Path("subjects") / subject_id / f"modality_{volume.modality_id}.mmgv"
        write_volume(root / rel, volume)
        paths[str(volume.modality_id)] = rel.as_posix()
    return SubjectEntry(subject_id=subject_id, label=spec.label_of(index), volumes=paths)


def generate(spec: SynthSpec, out_dir: Union[str, Path], workers: int = 1,
             show_progress: bool = False) -> str:
    """
    Write volumes, lesion maps, concept bank and manifest.

    Returns:
        Path of the manifest
    """
    root = Path(out_dir)
    root.mkdir(exist_ok=True, parents=True)
    indices = range(spec.n_subjects)
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        entries = list(tqdm(pool.map(lambda i: _write_subject(spec, root, i), indices),
                            total=spec.n_subjects, desc="subjects", disable=not show_progress))

    for c in range(spec.n_classes):
        write_volume(root / "lesions" / f"class_{c}.mmgv", Volume(modality_id=0, voxels=lesion_map(spec, c)))
    save_bank(synth_concepts(spec), root / "concepts.json")
    (root / "synth_spec.json").write_text(spec.model_dump_json(indent=2) + "\n", encoding="utf-8")

    manifest = DatasetManifest(n_classes=spec.n_classes, class_names=class_names(spec.n_classes),
                               subjects=entries)
    path = manifest.write(root / "manifest.json")
    logger.info(f"Generated {spec.n_subjects} subjects in {root}")
    return path


def load_spec(path: Union[str, Path]) -> SynthSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec {path} is not valid JSON: {exc.msg}") from None
    return SynthSpec.model_validate(data)
