"""
Differentiable operations.

Every function takes tensors (arrays and scalars are wrapped as constants),
computes the forward value with numpy and, when a tape is active and some
input requires gradients, records its backward rule.
"""

import math
from typing import Any, Callable, Optional, Sequence, Tuple, Union

import numpy as np

from shared.config import COSINE_MIN_NORM, GELU_COEFF, LAYERNORM_EPS
from shared.errors import DimensionError, DomainError, LabelIndexError

from .tape import current_tape
from .tensor import Tensor, as_tensor

Axis = Optional[Union[int, Tuple[int, ...]]]


def _emit(op: str, data: np.ndarray, inputs: Sequence[Tensor],
          rule: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]) -> Tensor:
    out = Tensor(data)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(op, tuple(inputs), out, rule)
    return out


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` back down to ``shape`` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(op, a.shape, b.shape) from None


# =============================================================================
# Elementwise arithmetic
# =============================================================================

def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)
    return _emit("add", a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def neg(x: Any) -> Tensor:
    x = as_tensor(x)
    return _emit("neg", -x.data, (x,), lambda g: (-g,))


def mul(a: Any, b: Any) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    return _emit("mul", a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape),
                            _unbroadcast(g * a.data, b.shape)))


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("div", a, b)
    return _emit("div", a.data / b.data, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.shape),
                            _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def scale(x: Any, c: float) -> Tensor:
    """Multiply by a scalar constant."""
    x = as_tensor(x)
    c = float(c)
    return _emit("scale", x.data * x.data.dtype.type(c), (x,), lambda g: (g * c,))


def power(x: Any, p: float) -> Tensor:
    x = as_tensor(x)
    p = float(p)
    return _emit("power", np.power(x.data, p), (x,),
                 lambda g: (g * p * np.power(x.data, p - 1.0),))


# =============================================================================
# Linear algebra and shape
# =============================================================================

def matmul(a: Any, b: Any) -> Tensor:
    """Matrix product of ``a[m×k]`` and ``b[k×n]``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", a.shape, b.shape)
    return _emit("matmul", a.data @ b.data, (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def transpose(x: Any) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 2:
        raise DimensionError("transpose", x.shape)
    return _emit("transpose", x.data.T.copy(), (x,), lambda g: (g.T,))


def reshape(x: Any, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError("reshape", x.shape, tuple(shape)) from None
    return _emit("reshape", data, (x,), lambda g: (g.reshape(x.shape),))


def concat(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        raise DimensionError("concat", *[p.shape for p in parts]) from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def rule(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concat", data, parts, rule)


def narrow(x: Any, axis: int, start: int, stop: int) -> Tensor:
    """Slice ``[start, stop)`` along ``axis``."""
    x = as_tensor(x)
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def rule(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return _emit("narrow", x.data[index].copy(), (x,), rule)


def gather_rows(x: Any, indices: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)
    if x.ndim < 1 or (idx.size and (idx.min() < 0 or idx.max() >= x.shape[0])):
        raise LabelIndexError(int(idx.max()) if idx.size else -1, x.shape[0] if x.ndim else 0)

    def rule(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g)
        return (full,)

    return _emit("gather_rows", x.data[idx], (x,), rule)


def broadcast_add_row(x: Any, row: Any) -> Tensor:
    """Add ``row[D]`` to every row of ``x[N×D]``."""
    x, row = as_tensor(x), as_tensor(row)
    if x.ndim != 2 or row.shape != (x.shape[1],):
        raise DimensionError("broadcast_add_row", x.shape, row.shape)
    return add(x, row)


def linear(x: Any, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Affine map ``x @ weight + bias``."""
    out = matmul(x, weight)
    return broadcast_add_row(out, bias) if bias is not None else out


# =============================================================================
# Reductions
# =============================================================================

def sum(x: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def rule(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _emit("sum", np.asarray(data), (x,), rule)


def mean(x: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    """Mean pool over ``axis`` (all axes when None)."""
    x = as_tensor(x)
    count = x.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
    return scale(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


# =============================================================================
# Activations and normalizations
# =============================================================================

def relu(x: Any) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return _emit("relu", np.where(mask, x.data, 0).astype(x.data.dtype), (x,),
                 lambda g: (g * mask,))


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Any) -> Tensor:
    """GELU, tanh approximation."""
    x = as_tensor(x)
    u = _GELU_C * (x.data + GELU_COEFF * x.data ** 3)
    t = np.tanh(u)
    out = 0.5 * x.data * (1.0 + t)

    def rule(g):
        du = _GELU_C * (1.0 + 3.0 * GELU_COEFF * x.data ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t * t) * du),)

    return _emit("gelu", out, (x,), rule)


def identity(x: Any) -> Tensor:
    return as_tensor(x)


def softmax(x: Any, axis: int = -1, temperature: float = 1.0) -> Tensor:
    """Temperature softmax, stabilized by subtracting the row maximum."""
    if not temperature > 0:
        raise DomainError(f"softmax temperature must be positive, got {temperature}")
    x = as_tensor(x)
    tau = float(temperature)
    z = x.data / x.data.dtype.type(tau)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def rule(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)) / tau,)

    return _emit("softmax", s, (x,), rule)


def layernorm(x: Any, gain: Any, bias: Any, eps: float = LAYERNORM_EPS) -> Tensor:
    """Normalize each row to zero mean, unit variance, then apply ``gain``/``bias``."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError("layernorm", x.shape, gain.shape, bias.shape)
    if not eps > 0:
        raise DomainError(f"layernorm eps must be positive, got {eps}")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gain.data + bias.data

    def rule(g):
        lead = tuple(range(g.ndim - 1))
        dgain = (g * xhat).sum(axis=lead)
        dbias = g.sum(axis=lead)
        dxhat = g * gain.data
        dx = inv / d * (d * dxhat - dxhat.sum(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
        return (dx, dgain, dbias)

    return _emit("layernorm", out, (x, gain, bias), rule)


# =============================================================================
# Similarity and objectives
# =============================================================================

def cosine_rows(a: Any, b: Any) -> Tensor:
    """Pairwise cosine similarity between rows of ``a[n×d]`` and ``b[m×d]``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DimensionError("cosine_rows", a.shape, b.shape)
    na = np.sqrt((a.data * a.data).sum(axis=1, keepdims=True))
    nb = np.sqrt((b.data * b.data).sum(axis=1, keepdims=True))
    for label, norms in (("left", na), ("right", nb)):
        bad = np.flatnonzero(norms[:, 0] <= COSINE_MIN_NORM)
        if bad.size:
            raise DomainError(f"cosine_rows: zero-norm {label} row {int(bad[0])}", index=int(bad[0]))
    an = a.data / na
    bn = b.data / nb
    out = np.clip(an @ bn.T, -1.0, 1.0)

    def rule(g):
        d_an = g @ bn
        d_bn = g.T @ an
        da = (d_an - an * (d_an * an).sum(axis=1, keepdims=True)) / na
        db = (d_bn - bn * (d_bn * bn).sum(axis=1, keepdims=True)) / nb
        return (da, db)

    return _emit("cosine_rows", out, (a, b), rule)


def cross_entropy(logits: Any, labels: Sequence[int]) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under row-wise softmax of ``logits[n×C]``."""
    logits = as_tensor(logits)
    if logits.ndim != 2 or len(labels) != logits.shape[0]:
        raise DimensionError("cross_entropy", logits.shape, (len(labels),))
    n, c = logits.shape
    y = np.asarray(labels, dtype=np.int64)
    for label in y:
        if label < 0 or label >= c:
            raise LabelIndexError(int(label), c)
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - log_norm
    loss = -logp[np.arange(n), y].mean()

    def rule(g):
        probs = np.exp(logp)
        probs[np.arange(n), y] -= 1.0
        return (probs * (g / n),)

    return _emit("cross_entropy", np.asarray(loss, dtype=logits.data.dtype), (logits,), rule)


ACTIVATIONS = {"relu": relu, "identity": identity, "gelu": gelu}
