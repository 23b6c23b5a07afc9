"""
diffcore: dense tensors with reverse-mode differentiation.

Usage:
    from mmgpl.diffcore import Tensor, Tape, ops

    w = Tensor([[1.0], [2.0]], requires_grad=True)
    with Tape() as tape:
        loss = ops.sum(ops.matmul(x, w))
    tape.backward(loss)
    w.grad
"""

from . import ops
from .tensor import Tensor, as_tensor, precision, default_dtype
from .tape import Tape, Node, backward, current_tape
from .module import Module
from .init import glorot_uniform, zeros, ones, seed_for, name_hash
from .checkpoint import save_checkpoint, load_checkpoint, encode_checkpoint, decode_checkpoint

__all__ = [
    "ops",
    "Tensor", "as_tensor", "precision", "default_dtype",
    "Tape", "Node", "backward", "current_tape",
    "Module",
    "glorot_uniform", "zeros", "ones", "seed_for", "name_hash",
    "save_checkpoint", "load_checkpoint", "encode_checkpoint", "decode_checkpoint",
]
