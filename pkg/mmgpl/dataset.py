"""
Dataset manifest and loader.

Manifest JSON:
    {
      "n_classes": 3,
      "class_names": ["...", "...", "..."],
      "subjects": [
        {"subject_id": "s0000", "label": 0,
         "volumes": {"0": "s0000/modality_0.mmgv", "1": "s0000/modality_1.mmgv"}}
      ]
    }

Volume paths are relative to the manifest's directory.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from shared.errors import DataError

from .voltok import Volume, read_volume

logger = logging.getLogger(__name__)


class SubjectEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subject_id: str
    label: int = Field(..., ge=0)
    volumes: Dict[str, str] = Field(..., description="modality id -> volume file path")


class DatasetManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_classes: int = Field(..., ge=2)
    class_names: List[str] = Field(default_factory=list)
    subjects: List[SubjectEntry] = Field(default_factory=list)

    def write(self, path: Union[str, Path]) -> str:
        filepath = Path(path)
        filepath.parent.mkdir(exist_ok=True, parents=True)
        filepath.write_text(json.dumps(self.model_dump(), indent=2) + "\n", encoding="utf-8")
        return str(filepath)


@dataclass
class Subject:
    subject_id: str
    label: int
    volumes: List[Volume] = field(default_factory=list)

    def volume(self, modality_id: int) -> Volume:
        for v in self.volumes:
            if v.modality_id == modality_id:
                return v
        raise DataError(f"subject {self.subject_id} has no modality {modality_id}",
                        details={"subject_id": self.subject_id, "modality_id": modality_id})


@dataclass
class Dataset:
    subjects: List[Subject]
    n_classes: int
    class_names: List[str]
    manifest_path: Optional[str] = None

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def labels(self) -> List[int]:
        return [s.label for s in self.subjects]

    def subset(self, indices: Sequence[int]) -> List[Subject]:
        return [self.subjects[i] for i in indices]

    def find(self, subject_id: str) -> Subject:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise DataError(f"unknown subject {subject_id!r}", details={"subject_id": subject_id})


def read_manifest(path: Union[str, Path]) -> DatasetManifest:
    filepath = Path(path)
    try:
        data = json.loads(filepath.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"manifest not found: {filepath}", details={"path": str(filepath)}) from None
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest is not valid JSON: {exc.msg}", details={"path": str(filepath)}) from None
    try:
        return DatasetManifest.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise DataError(f"invalid manifest: {first['msg']}",
                        details={"path": str(filepath), "location": list(first["loc"])}) from None


def load_dataset(manifest_path: Union[str, Path],
                 modalities: Optional[Sequence[int]] = None) -> Dataset:
    """
    Read every subject's volumes.

    Args:
        manifest_path: dataset manifest JSON
        modalities: keep only these modality ids (None keeps all)

    Raises:
        DataError: missing files, labels outside [0, n_classes), bad volumes
    """
    manifest = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    subjects = []
    for entry in manifest.subjects:
        if entry.label >= manifest.n_classes:
            raise DataError(f"subject {entry.subject_id} label {entry.label} >= n_classes",
                            details={"subject_id": entry.subject_id})
        volumes = []
        for key in sorted(entry.volumes, key=int):
            if modalities is not None and int(key) not in modalities:
                continue
            vol_path = root / entry.volumes[key]
            if not vol_path.exists():
                raise DataError(f"volume file missing: {vol_path}", details={"path": str(vol_path)})
            volume = read_volume(vol_path)
            if volume.modality_id != int(key):
                raise DataError(f"{vol_path} holds modality {volume.modality_id}, manifest says {key}",
                                details={"path": str(vol_path)})
            volumes.append(volume)
        subjects.append(Subject(entry.subject_id, entry.label, volumes))
    names = manifest.class_names or [f"class_{c}" for c in range(manifest.n_classes)]
    logger.info(f"Loaded {len(subjects)} subjects from {manifest_path}")
    return Dataset(subjects, manifest.n_classes, names, str(manifest_path))
