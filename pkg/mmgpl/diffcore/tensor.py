"""
Dense tensor value with optional gradient participation.

Storage is a row-major numpy array of 32-bit reals. Gradient checks may
switch the storage width to 64 bits for the duration of a ``precision``
block; everything else runs at 32 bits.
"""

import threading
from contextlib import contextmanager
from typing import Any, Iterator, Optional, Tuple

import numpy as np

_state = threading.local()


def default_dtype() -> np.dtype:
    return getattr(_state, "dtype", np.dtype(np.float32))


@contextmanager
def precision(dtype: Any) -> Iterator[None]:
    """Temporarily change the storage width of newly created tensors."""
    previous = default_dtype()
    _state.dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _state.dtype = previous


class Tensor:
    """
    Dense multi-dimensional real array.

    Attributes:
        data: numpy array holding the values (row-major)
        requires_grad: whether backward passes accumulate into ``grad``
        grad: gradient array with the same shape as ``data``, or None
        name: optional parameter name, used by checkpoints and logs
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None):
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.ascontiguousarray(np.asarray(data, dtype=default_dtype()))
        self.requires_grad: bool = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name

    # --- convenience ---
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), name=self.name)

    def accumulate_grad(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=self.data.dtype).reshape(self.data.shape)
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def __repr__(self) -> str:
        req = ", requires_grad=True" if self.requires_grad else ""
        nm = f", name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{req}{nm})"

    # --- operators (defined in ops to keep backward rules in one place) ---
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    @property
    def T(self) -> "Tensor":
        from . import ops
        return ops.transpose(self)


def as_tensor(x: Any) -> Tensor:
    """Wrap arrays and scalars as constant tensors; pass tensors through."""
    return x if isinstance(x, Tensor) else Tensor(x)
