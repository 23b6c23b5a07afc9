"""
Deterministic parameter initialization.

One master seed fans out to a per-parameter PCG64 stream keyed by a stable
hash of the parameter name, so adding or reordering parameters never shifts
the values of the others.
"""

import hashlib
from typing import Sequence

import numpy as np

from .tensor import Tensor


def name_hash(name: str) -> int:
    """Stable 64-bit hash of a parameter name."""
    return int.from_bytes(hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest(), "little")


def seed_for(name: str, master_seed: int) -> np.random.Generator:
    h = name_hash(name)
    seq = np.random.SeedSequence([master_seed & 0xFFFFFFFFFFFFFFFF, h & 0xFFFFFFFF, h >> 32])
    return np.random.Generator(np.random.PCG64(seq))


def glorot_uniform(shape: Sequence[int], name: str, master_seed: int) -> Tensor:
    """Glorot/Xavier uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    shape = tuple(int(s) for s in shape)
    fan_in = shape[0]
    fan_out = shape[1] if len(shape) > 1 else shape[0]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    values = seed_for(name, master_seed).uniform(-limit, limit, size=shape)
    return Tensor(values.astype(np.float32), requires_grad=True, name=name)


def zeros(shape: Sequence[int], name: str) -> Tensor:
    return Tensor(np.zeros(tuple(shape), dtype=np.float32), requires_grad=True, name=name)


def ones(shape: Sequence[int], name: str) -> Tensor:
    return Tensor(np.ones(tuple(shape), dtype=np.float32), requires_grad=True, name=name)
