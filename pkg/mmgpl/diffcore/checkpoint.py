"""
Checkpoint codec.

Layout (little-endian):
    b"MMGC", u32 version
    repeated: u32 name_len, name (UTF-8), u32 rank, u32 dims[rank], f32 data[prod(dims)]
    u64 record_count
"""

import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from shared.config import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from shared.errors import FormatError

from .tensor import Tensor

ArrayLike = Union[np.ndarray, Tensor]


def encode_checkpoint(params: Mapping[str, ArrayLike]) -> bytes:
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION)]
    for name, value in params.items():
        data = value.data if isinstance(value, Tensor) else np.asarray(value)
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<I", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(np.ascontiguousarray(data, dtype="<f4").tobytes())
    chunks.append(struct.pack("<Q", len(params)))
    return b"".join(chunks)


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Dict[str, np.ndarray]:
    if len(blob) < 16 or blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError("not a checkpoint (bad magic)", path=source)
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", path=source)

    end = len(blob) - 8
    (expected,) = struct.unpack_from("<Q", blob, end)
    offset = 8
    records: "OrderedDict[str, np.ndarray]" = OrderedDict()
    try:
        while offset < end:
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            dims = struct.unpack_from(f"<{rank}I", blob, offset)
            offset += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            data = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            offset += 4 * count
            records[name] = data.astype(np.float32).reshape(dims)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"truncated checkpoint: {exc}", path=source) from None
    if offset != end or len(records) != expected:
        raise FormatError(
            f"checkpoint record count {len(records)} does not match trailer {expected}",
            path=source
        )
    return records


def save_checkpoint(path: Union[str, Path], params: Mapping[str, ArrayLike]) -> str:
    filepath = Path(path)
    filepath.parent.mkdir(exist_ok=True, parents=True)
    filepath.write_bytes(encode_checkpoint(params))
    return str(filepath)


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    filepath = Path(path)
    try:
        blob = filepath.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint: {exc.strerror or exc}", path=str(filepath)) from None
    return decode_checkpoint(blob, source=str(filepath))
