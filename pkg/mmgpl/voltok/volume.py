"""
Volumetric modality container and its binary file format.

Layout (little-endian):
    b"MMGV", u32 version, u32 modality_id, u32 H, u32 W, u32 D, u32 C,
    f32 voxels[H*W*D*C] row-major (H outer, C inner)
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from shared.config import VOLUME_MAGIC, VOLUME_VERSION
from shared.errors import DataError, FormatError

_HEADER = struct.Struct("<4sIIIIII")


@dataclass
class Volume:
    """One modality of one subject: voxels shaped (H, W, D, C)."""
    modality_id: int
    voxels: np.ndarray

    def __post_init__(self):
        voxels = np.asarray(self.voxels, dtype=np.float32)
        if voxels.ndim == 3:
            voxels = voxels[..., np.newaxis]
        if voxels.ndim != 4 or min(voxels.shape) < 1:
            raise DataError(f"volume must be (H, W, D, C), got shape {voxels.shape}")
        if not np.all(np.isfinite(voxels)):
            raise DataError(f"volume for modality {self.modality_id} has non-finite voxels")
        self.voxels = np.ascontiguousarray(voxels)

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        return tuple(int(s) for s in self.voxels.shape)


def encode_volume(volume: Volume) -> bytes:
    h, w, d, c = volume.dims
    header = _HEADER.pack(VOLUME_MAGIC, VOLUME_VERSION, volume.modality_id, h, w, d, c)
    return header + volume.voxels.astype("<f4").tobytes()


def decode_volume(blob: bytes, source: str = "<bytes>") -> Volume:
    if len(blob) < _HEADER.size:
        raise FormatError("volume file too short", path=source)
    magic, version, modality_id, h, w, d, c = _HEADER.unpack_from(blob, 0)
    if magic != VOLUME_MAGIC:
        raise FormatError("not a volume file (bad magic)", path=source)
    if version != VOLUME_VERSION:
        raise FormatError(f"unsupported volume version {version}", path=source)
    count = h * w * d * c
    if len(blob) != _HEADER.size + 4 * count:
        raise FormatError(
            f"volume payload has {len(blob) - _HEADER.size} bytes, expected {4 * count}",
            path=source
        )
    voxels = np.frombuffer(blob, dtype="<f4", count=count, offset=_HEADER.size)
    return Volume(modality_id=modality_id, voxels=voxels.reshape(h, w, d, c).astype(np.float32))


def write_volume(path: Union[str, Path], volume: Volume) -> str:
    filepath = Path(path)
    filepath.parent.mkdir(exist_ok=True, parents=True)
    filepath.write_bytes(encode_volume(volume))
    return str(filepath)


def read_volume(path: Union[str, Path]) -> Volume:
    filepath = Path(path)
    try:
        blob = filepath.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read volume: {exc.strerror or exc}",
                        details={"path": str(filepath)}) from None
    return decode_volume(blob, source=str(filepath))
