"""
Shared fixtures and the finite-difference gradient checker.

Run with: python -m pytest tests/ -v
"""

import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pytest

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from mmgpl.config import RunConfig  # noqa: E402
from mmgpl.diffcore import Tape, Tensor, ops, precision  # noqa: E402
from mmgpl.synthgen import SynthSpec, generate  # noqa: E402

FD_STEP = 1e-3
FD_ATOL = 1e-4
FD_RTOL = 1e-3


def numeric_gradient(f: Callable[[], float], t: Tensor, h: float = FD_STEP) -> np.ndarray:
    grad = np.zeros_like(t.data)
    flat = t.data.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = f()
        flat[i] = keep - h
        down = f()
        flat[i] = keep
        grad.reshape(-1)[i] = (up - down) / (2 * h)
    return grad


def check_gradients(fn: Callable[[], Tensor], tensors: Sequence[Tensor], seed: int = 0) -> float:
    """
    Compare tape gradients of ``sum(fn() * R)`` with central differences.

    The tensors are widened to float64 in place and every operation runs at
    float64. Returns the worst |analytic - numeric| / (atol + rtol * scale)
    ratio; anything <= 1 passes.
    """
    with precision(np.float64):
        for t in tensors:
            t.data = t.data.astype(np.float64)
            t.requires_grad = True
            t.grad = None
        sample = fn()
        R = np.random.default_rng(10_000 + seed).uniform(-1.0, 1.0, size=sample.shape)

        with Tape() as tape:
            loss = ops.sum(ops.mul(fn(), R))
        tape.backward(loss)

        def value() -> float:
            return float((fn().data * R).sum())

        worst = 0.0
        for t in tensors:
            analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
            numeric = numeric_gradient(value, t)
            scale = np.maximum(np.abs(analytic), np.abs(numeric))
            ratio = np.abs(analytic - numeric) / (FD_ATOL + FD_RTOL * scale)
            worst = max(worst, float(ratio.max()) if ratio.size else 0.0)
    return worst


def away_from_zero(rng: np.random.Generator, shape, low: float = 0.05, high: float = 2.0) -> np.ndarray:
    """Uniform magnitudes in [low, high] with random signs (clear of kinks at 0)."""
    return rng.uniform(low, high, size=shape) * rng.choice([-1.0, 1.0], size=shape)


@pytest.fixture
def gradcheck():
    return check_gradients


@pytest.fixture(scope="session")
def small_spec() -> SynthSpec:
    """12 subjects, 3 classes, 16³ volumes cut into 8³ cubes (8 tokens per modality)."""
    return SynthSpec(
        n_subjects=12, n_classes=3, dims=(16, 16, 16), n_modalities=2, n_concepts=4,
        lesion_radius=2, signal_amplitude=1.0, noise_std=0.25, patch_size=8, seed=3,
    )


@pytest.fixture(scope="session")
def small_data(tmp_path_factory, small_spec) -> Path:
    """Generated once per session; returns the dataset directory."""
    out = tmp_path_factory.mktemp("synth")
    generate(small_spec, out)
    return out


@pytest.fixture(scope="session")
def small_config(small_data) -> RunConfig:
    """A run config sized for the small dataset and a few fast epochs."""
    return RunConfig.model_validate({
        "seed": 7,
        "patch.size": 8,
        "token.dim": 16,
        "text.dim": 32,
        "encoder.layers": 1,
        "encoder.heads": 2,
        "encoder.mlp_hidden": 32,
        "train.epochs": 3,
        "train.decay_epochs": [],
        "train.batch_size": 4,
        "train.base_lr": 0.01,
        "train.folds": 2,
        "train.repeats": 1,
        "data.manifest": str(small_data / "manifest.json"),
        "data.bank": str(small_data / "concepts.json"),
    })
