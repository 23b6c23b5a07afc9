"""
Tests for the unified encoder and the concept-space head

Run with: python -m pytest tests/test_encoder.py -v
"""

import numpy as np
import pytest
from pydantic import ValidationError

from mmgpl.concepts import ConceptEmbeddings
from mmgpl.diffcore import Tape, Tensor, ops
from mmgpl.encoder import (
    ClassifierHead, EncoderConfig, EncoderLayer, UnifiedEncoder, class_logits, concept_logits, encode,
    encoder_layer, loss, mhsa,
)
from mmgpl.trainer import AdamW
from shared.errors import DimensionError, DomainError

from conftest import check_gradients


def small_layer(dim=4, heads=2, hidden=8, seed=0):
    return EncoderLayer(EncoderConfig(layers=1, heads=heads, dim=dim, mlp_hidden=hidden), master_seed=seed)


def unit_rows(rows):
    rows = np.asarray(rows, dtype=float)
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def embeddings(rows, n_classes, k):
    return ConceptEmbeddings(Z=Tensor(unit_rows(rows)), n_classes=n_classes, k=k,
                             class_names=tuple(str(i) for i in range(n_classes)))


def identity_head(dim, tau=1.0):
    head = ClassifierHead(token_dim=dim, text_dim=dim, tau=tau)
    head.weight.data = np.eye(dim, dtype=np.float32)
    return head


class TestEncoderConfig:
    def test_heads_must_divide_dim(self):
        with pytest.raises(ValidationError):
            EncoderConfig(dim=6, heads=4)

    def test_head_dim(self):
        assert EncoderConfig(dim=64, heads=4).head_dim == 16


class TestAttention:
    """Multi-head self-attention."""

    def test_single_token_attends_to_itself(self):
        """N=1: every attention weight is 1, so the output is V then the output projection."""
        layer = small_layer()
        x = Tensor(np.random.default_rng(0).normal(size=(1, 4)))
        out, attention = mhsa(x, layer, return_attention=True)
        assert all(a.data.shape == (1, 1) and a.data[0, 0] == pytest.approx(1.0) for a in attention)
        v = x.data @ layer.wv.data + layer.bv.data
        np.testing.assert_allclose(out.data, v @ layer.wo.data + layer.bo.data, atol=1e-5)

    def test_zero_input_gives_zero_output(self):
        layer = small_layer()
        np.testing.assert_allclose(mhsa(Tensor(np.zeros((3, 4))), layer).data, np.zeros((3, 4)))

    def test_attention_rows_are_distributions(self):
        layer = small_layer(dim=8, heads=4)
        x = Tensor(np.random.default_rng(1).normal(size=(5, 8)))
        _, attention = mhsa(x, layer, return_attention=True)
        assert len(attention) == 4
        for a in attention:
            np.testing.assert_allclose(a.data.sum(axis=1), np.ones(5), atol=1e-5)

    def test_width_checked(self):
        with pytest.raises(DimensionError):
            mhsa(Tensor(np.ones((2, 3))), small_layer())

    @pytest.mark.parametrize("seed", range(25))
    def test_gradients(self, seed):
        rng = np.random.default_rng(600 + seed)
        layer = small_layer(seed=seed)
        x = Tensor(rng.normal(size=(int(rng.integers(1, 6)), 4)))
        params = [x, layer.wq, layer.wk, layer.wv, layer.wo, layer.bq, layer.bk, layer.bv, layer.bo]
        assert check_gradients(lambda: mhsa(x, layer), params, seed=seed) <= 1.0


class TestEncoderLayer:
    """Pre-norm residual blocks."""

    def test_zero_output_projections_are_identity(self):
        layer = small_layer()
        for p in (layer.wo, layer.bo, layer.w2, layer.b2):
            p.data = np.zeros_like(p.data)
        z = Tensor(np.random.default_rng(3).normal(size=(4, 4)))
        np.testing.assert_allclose(encoder_layer(z, layer).data, z.data, atol=1e-6)

    def test_every_parameter_gets_a_gradient(self):
        layer = small_layer(seed=4)
        z = Tensor(np.random.default_rng(4).normal(size=(3, 4)))
        with Tape() as tape:
            out = ops.sum(ops.mul(encoder_layer(z, layer), np.random.default_rng(5).normal(size=(3, 4))))
        tape.backward(out)
        for name, p in layer.named_parameters().items():
            assert p.grad is not None, name

    @pytest.mark.parametrize("seed", range(25))
    def test_gradients(self, seed):
        rng = np.random.default_rng(700 + seed)
        layer = small_layer(seed=seed)
        z = Tensor(rng.normal(size=(int(rng.integers(1, 6)), 4)))
        assert check_gradients(lambda: encoder_layer(z, layer), [z] + layer.parameters(), seed=seed) <= 1.0


class TestEncode:
    """Layer stack with mean pooling."""

    def test_no_layers_is_mean(self):
        enc = UnifiedEncoder(EncoderConfig(layers=0, heads=1, dim=3))
        T = np.random.default_rng(7).normal(size=(5, 3))
        np.testing.assert_allclose(encode(Tensor(T), enc).data, T.mean(axis=0), atol=1e-6)

    def test_token_permutation_invariance(self):
        enc = UnifiedEncoder(EncoderConfig(layers=2, heads=2, dim=4, mlp_hidden=8), master_seed=1)
        T = np.random.default_rng(8).normal(size=(6, 4))
        perm = np.random.default_rng(9).permutation(6)
        np.testing.assert_allclose(encode(Tensor(T[perm]), enc).data, encode(Tensor(T), enc).data, atol=1e-5)

    def test_empty_sequence_rejected(self):
        enc = UnifiedEncoder(EncoderConfig(layers=1, heads=1, dim=3, mlp_hidden=4))
        with pytest.raises(DimensionError):
            encode(Tensor(np.zeros((0, 3))), enc)

    def test_frozen_parameters_never_change(self):
        """A frozen encoder passes gradients to its input while its weights stay put."""
        enc = UnifiedEncoder(EncoderConfig(layers=1, heads=2, dim=4, mlp_hidden=8, frozen=True))
        before = enc.state_dict()
        assert enc.trainable_parameters() == {}
        T = Tensor(np.random.default_rng(10).normal(size=(3, 4)), requires_grad=True)
        opt = AdamW(enc.trainable_parameters(), lr=0.1)
        with Tape() as tape:
            out = ops.sum(encode(T, enc))
        tape.backward(out)
        opt.step()
        assert T.grad is not None
        for name, values in enc.state_dict().items():
            np.testing.assert_array_equal(values, before[name])


class TestHead:
    """Cosine concept scores and category averaging."""

    def test_parallel_concept_scores_one_over_tau(self):
        Z = embeddings([[1.0, 0.0], [0.0, 1.0]], n_classes=2, k=1)
        scores = concept_logits(Tensor([2.0, 0.0]), Z, identity_head(2, tau=0.5))
        np.testing.assert_allclose(scores.data, [2.0, 0.0], atol=1e-6)

    def test_orthogonal_scores_zero(self):
        Z = embeddings([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], n_classes=2, k=1)
        scores = concept_logits(Tensor([3.0, 0.0, 0.0]), Z, identity_head(3))
        np.testing.assert_allclose(scores.data, [0.0, 0.0], atol=1e-6)

    def test_scale_invariant(self):
        rng = np.random.default_rng(11)
        Z = embeddings(rng.normal(size=(4, 3)), n_classes=2, k=2)
        head = ClassifierHead(3, 3, master_seed=2)
        z = rng.normal(size=3)
        np.testing.assert_allclose(concept_logits(Tensor(z), Z, head).data,
                                   concept_logits(Tensor(5 * z), Z, head).data, atol=1e-4)

    def test_scores_bounded_by_temperature(self):
        rng = np.random.default_rng(12)
        Z = embeddings(rng.normal(size=(6, 4)), n_classes=3, k=2)
        head = ClassifierHead(4, 4, tau=0.1, master_seed=5)
        scores = concept_logits(Tensor(rng.normal(size=4)), Z, head)
        assert scores.shape == (6,)
        assert np.all(np.abs(scores.data) <= 10.0 + 1e-4)

    def test_class_logits_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            C, K = rng.integers(2, 5), rng.integers(1, 5)
            s = rng.normal(size=C * K)
            expected = [np.mean(s[c * K:(c + 1) * K]) for c in range(C)]
            np.testing.assert_allclose(class_logits(Tensor(s), C, K).data, expected, atol=1e-5)

    def test_class_logits_size_checked(self):
        with pytest.raises(DimensionError):
            class_logits(Tensor(np.zeros(5)), 2, 2)

    def test_bad_temperature(self):
        with pytest.raises(DomainError):
            ClassifierHead(2, 2, tau=0.0)

    def test_loss_matches_cross_entropy(self):
        logits = np.array([[2.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
        value = loss(Tensor(logits), [0, 1]).item()
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        assert value == pytest.approx(-(logp[0, 0] + logp[1, 1]) / 2, rel=1e-5)

    @pytest.mark.parametrize("seed", range(25))
    def test_gradients(self, seed):
        rng = np.random.default_rng(800 + seed)
        c, k, dim = int(rng.integers(2, 4)), int(rng.integers(1, 4)), int(rng.integers(2, 6))
        Z = embeddings(rng.normal(size=(c * k, dim)), n_classes=c, k=k)
        head = ClassifierHead(dim, dim, tau=0.5, master_seed=seed)
        z = Tensor(rng.normal(size=dim))
        fn = lambda: class_logits(concept_logits(z, Z, head), c, k)  # noqa: E731
        assert check_gradients(fn, [z, head.weight, head.bias], seed=seed) <= 1.0
