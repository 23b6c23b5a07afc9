"""
AdamW with decoupled weight decay and a step learning-rate schedule.

Update for parameter p with gradient g at step t:
    m = β1·m + (1−β1)·g
    v = β2·v + (1−β2)·g²
    p ← p − lr·λ·p
    p ← p − lr · m̂ / (sqrt(v̂) + ε),   m̂ = m/(1−β1^t), v̂ = v/(1−β2^t)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from shared.config import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_WEIGHT_DECAY
from shared.errors import DimensionError

from ..config import TrainConfig
from ..diffcore import Tensor

logger = logging.getLogger(__name__)


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Base rate times decay for every decay epoch already reached."""
    passed = sum(1 for e in config.decay_epochs if epoch >= e)
    lr = config.base_lr * config.lr_decay ** passed
    # round away the binary residue of repeated multiplication (1e-4·0.2 -> 2e-5)
    return float(f"{lr:.12g}")


@dataclass
class OptimizerState:
    """Per-parameter first/second moments and the shared step counter."""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    weight_decay: float = DEFAULT_WEIGHT_DECAY


def adamw_step(params: Mapping[str, Tensor], grads: Mapping[str, Optional[np.ndarray]],
               state: OptimizerState, lr: float) -> None:
    """
    One AdamW update in place. Parameters without a gradient are skipped.

    Raises:
        DimensionError: a gradient does not match its parameter's shape
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise DimensionError(f"adamw[{name}]", p.shape, g.shape)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros(p.shape, dtype=np.float64)
            state.v[name] = np.zeros(p.shape, dtype=np.float64)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        data = p.data.astype(np.float64)
        data -= lr * state.weight_decay * data
        data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.data = data.astype(p.data.dtype)


class AdamW:
    """Holds the trainable parameters and their optimizer state."""

    def __init__(self, params: Mapping[str, Tensor], lr: float,
                 weight_decay: float = DEFAULT_WEIGHT_DECAY,
                 beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2, eps: float = ADAM_EPS):
        self.params = dict(params)
        self.lr = lr
        self.state = OptimizerState(beta1=beta1, beta2=beta2, eps=eps, weight_decay=weight_decay)
        logger.debug(f"AdamW over {len(self.params)} tensors: lr={lr}, weight_decay={weight_decay}")

    def step(self, lr: Optional[float] = None) -> None:
        grads = {name: p.grad for name, p in self.params.items()}
        adamw_step(self.params, grads, self.state, self.lr if lr is None else lr)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
