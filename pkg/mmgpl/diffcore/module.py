"""
Parameter container base class.

Modules register tensors and child modules by name; ``named_parameters``
flattens them into dotted names (``encoder.layer0.wq``) used by the
optimizer and by checkpoints.
"""

from collections import OrderedDict
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from shared.errors import DimensionError, FormatError

from .tensor import Tensor


class Module:
    """Base class for anything that owns trainable tensors."""

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()
        self._children: "OrderedDict[str, Module]" = OrderedDict()
        self.frozen = False

    def add_parameter(self, name: str, tensor: Tensor) -> Tensor:
        self._params[name] = tensor
        return tensor

    def add_module(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def _walk(self, prefix: str) -> Iterator[Tuple[str, Tensor]]:
        for name, tensor in self._params.items():
            yield f"{prefix}{name}", tensor
        for name, child in self._children.items():
            yield from child._walk(f"{prefix}{name}.")

    def named_parameters(self, prefix: str = "") -> Dict[str, Tensor]:
        return OrderedDict(self._walk(f"{prefix}." if prefix else ""))

    def parameters(self) -> List[Tensor]:
        return list(self.named_parameters().values())

    def trainable_parameters(self) -> Dict[str, Tensor]:
        return OrderedDict((n, p) for n, p in self.named_parameters().items() if p.requires_grad)

    def freeze(self) -> None:
        """Exclude every parameter from updates; gradients still flow through."""
        self.frozen = True
        for p in self.parameters():
            p.requires_grad = False

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((n, p.data.copy()) for n, p in self.named_parameters().items())

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        params = self.named_parameters()
        missing = [n for n in params if n not in state]
        unexpected = [n for n in state if n not in params]
        if missing or unexpected:
            raise FormatError(
                f"checkpoint mismatch: missing={missing[:5]} unexpected={unexpected[:5]}"
            )
        for name, tensor in params.items():
            values = np.asarray(state[name], dtype=np.float32)
            if values.shape != tensor.shape:
                raise DimensionError(f"load {name}", tensor.shape, values.shape)
            tensor.data = values.copy()
