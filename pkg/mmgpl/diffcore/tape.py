"""
Define-by-run gradient tape.

Usage:
    with Tape() as tape:
        loss = ops.cross_entropy(logits_fn(params), labels)
    tape.backward(loss)

A tape records every differentiable operation executed while it is active
and whose inputs participate in gradients. It is confined to the thread
that opened it and may be run backward exactly once.
"""

import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from shared.errors import ContractError

from .tensor import Tensor

BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_local = threading.local()


def _stack() -> List["Tape"]:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def current_tape() -> Optional["Tape"]:
    stack = _stack()
    return stack[-1] if stack else None


@dataclass
class Node:
    """One executed operation: inputs, output and the rule mapping dL/dout to dL/dinputs."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardRule


class Tape:
    """Ordered record of differentiable operations, inputs before outputs."""

    def __init__(self):
        self.nodes: List[Node] = []
        self._consumed = False

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()

    def record(self, op: str, inputs: Tuple[Tensor, ...], output: Tensor,
               backward: BackwardRule) -> None:
        self.nodes.append(Node(op, inputs, output, backward))

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Tensor) -> None:
        """
        Accumulate dL/dx into ``grad`` of every requires_grad tensor reachable from ``loss``.

        Raises:
            ContractError: non-scalar loss, loss not produced here, or a second call
        """
        if self._consumed:
            raise ContractError("backward already ran on this tape; record a new forward pass")
        if loss.size != 1:
            raise ContractError(f"loss must be a scalar, got shape {loss.shape}")
        if not any(node.output is loss for node in self.nodes):
            raise ContractError("loss was not produced on this tape")
        self._consumed = True

        pending: Dict[int, Tuple[Tensor, np.ndarray]] = {
            id(loss): (loss, np.ones_like(loss.data))
        }
        for node in reversed(self.nodes):
            entry = pending.pop(id(node.output), None)
            if entry is None:
                continue
            out, g = entry
            out.accumulate_grad(g)
            for inp, ig in zip(node.inputs, node.backward(g)):
                if ig is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in pending:
                    pending[key] = (inp, pending[key][1] + ig)
                else:
                    pending[key] = (inp, ig)

        # whatever remains was not produced on this tape: leaves
        for tensor, g in pending.values():
            tensor.accumulate_grad(g)


def backward(loss: Tensor, tape: Tape) -> None:
    """Run ``tape`` backward from the scalar ``loss``."""
    tape.backward(loss)
