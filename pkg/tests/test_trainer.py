"""
Tests for the optimizer, schedule, metrics and cross-validation runners

Run with: python -m pytest tests/test_trainer.py -v
"""

import json

import numpy as np
import pandas as pd
import pytest

from mmgpl.concepts import embed_bank, load_bank
from mmgpl.config import TrainConfig
from mmgpl.dataset import load_dataset
from mmgpl.diffcore import Tape, Tensor
from mmgpl.model import MMGPLModel
from mmgpl.trainer import (
    RUN_COLUMNS, AdamW, OptimizerState, adamw_step, arm_config, cross_validate, evaluate,
    kfold_split, lr_at, modality_label, predict, run_modality_ablation, subject_loss, summarize,
    train_model,
)
from mmgpl.voltok import TokenLayout
from shared.config import METRIC_NAMES
from shared.errors import DataError, DimensionError


@pytest.fixture
def dataset(small_data):
    return load_dataset(small_data / "manifest.json")


@pytest.fixture
def embeddings(small_data, small_config):
    return embed_bank(load_bank(small_data / "concepts.json"), dim=small_config.text_dim)


def build_model(dataset, embeddings, config):
    layout = TokenLayout.from_volumes(dataset.subjects[0].volumes, config.patch())
    return MMGPLModel(layout, embeddings, config)


class TestSchedule:
    """Step decay of the learning rate."""

    def test_default_schedule(self):
        cfg = TrainConfig()
        assert [cfg.base_lr, cfg.lr_decay, tuple(cfg.decay_epochs)] == [1e-4, 0.2, (30, 60)]
        assert lr_at(0, cfg) == 1e-4
        assert lr_at(29, cfg) == 1e-4
        assert lr_at(30, cfg) == 2e-5
        assert lr_at(59, cfg) == 2e-5
        assert lr_at(60, cfg) == 4e-6
        assert lr_at(99, cfg) == 4e-6

    def test_decay_epoch_must_fall_inside_run(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=20, decay_epochs=(30,))

    def test_batch_size_restricted(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=5)


class TestAdamW:
    """Decoupled weight decay with bias-corrected moments."""

    def test_first_step_moves_by_lr(self):
        """Bias correction makes the first step lr·sign(g)."""
        p = Tensor([1.0, -1.0])
        state = OptimizerState(weight_decay=0.0)
        adamw_step({"p": p}, {"p": np.array([0.5, -3.0])}, state, lr=0.1)
        np.testing.assert_allclose(p.data, [0.9, -0.9], atol=1e-6)
        assert state.step == 1

    def test_weight_decay_is_decoupled(self):
        p = Tensor([1.0])
        adamw_step({"p": p}, {"p": np.array([0.5])}, OptimizerState(weight_decay=0.01), lr=0.1)
        assert p.data[0] == pytest.approx(1.0 - 0.1 * 0.01 - 0.1, abs=1e-6)

    def test_zero_gradient_only_decays(self):
        p = Tensor([2.0])
        adamw_step({"p": p}, {"p": np.zeros(1)}, OptimizerState(weight_decay=0.5), lr=0.1)
        assert p.data[0] == pytest.approx(2.0 * (1 - 0.05), abs=1e-6)

    def test_missing_gradient_skipped(self):
        p = Tensor([3.0])
        adamw_step({"p": p}, {}, OptimizerState(), lr=0.1)
        assert p.data[0] == 3.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            adamw_step({"p": Tensor([1.0, 2.0])}, {"p": np.ones(3)}, OptimizerState(), lr=0.1)

    def test_minimizes_quadratic(self):
        """Repeated steps on (p - 3)^2 approach 3."""
        p = Tensor([0.0], requires_grad=True)
        opt = AdamW({"p": p}, lr=0.1, weight_decay=0.0)
        for _ in range(300):
            p.grad = 2 * (p.data - 3.0)
            opt.step()
            opt.zero_grad()
        assert p.data[0] == pytest.approx(3.0, abs=0.1)
        assert p.grad is None


class TestMetrics:
    """ACC plus macro SEN, SPE, F1 and one-vs-rest AUC."""

    def test_toy_confusion(self):
        """Confusion [[2,0,0],[1,1,0],[0,0,2]]."""
        labels = [0, 0, 1, 1, 2, 2]
        preds = [0, 0, 0, 1, 2, 2]
        scores = np.eye(3)[preds]
        report = evaluate(preds, scores, labels)
        assert report.acc == pytest.approx(5 / 6)
        assert report.sen == pytest.approx(0.8333, abs=1e-4)
        assert report.spe == pytest.approx(0.91667, abs=1e-4)
        assert report.f1 == pytest.approx(0.8222, abs=1e-4)

    def test_perfect_predictions(self):
        labels = [0, 1, 2, 0, 1, 2]
        report = evaluate(labels, np.eye(3)[labels], labels)
        assert report.to_dict() == {"acc": 1.0, "auc": 1.0, "spe": 1.0, "sen": 1.0, "f1": 1.0}

    def test_constant_scores_give_half_auc(self):
        report = evaluate([0, 0, 0, 0], np.full((4, 2), 0.5), [0, 1, 0, 1])
        assert report.auc == pytest.approx(0.5)

    def test_absent_class_excluded(self):
        report = evaluate([0, 1], np.array([[0.9, 0.1, 0.0], [0.2, 0.8, 0.0]]), [0, 1], n_classes=3)
        assert report.excluded_classes == [2]
        assert report.sen == 1.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            evaluate([0, 1], np.zeros((3, 2)), [0, 1])


class TestSplitsAndSummaries:
    def test_stratified_five_folds(self):
        """n=10 balanced: five disjoint test folds covering every index, one per class each."""
        labels = [0] * 5 + [1] * 5
        splits = kfold_split(labels, 5, seed=0)
        assert len(splits) == 5
        tests = np.concatenate([test for _, test in splits])
        assert sorted(tests.tolist()) == list(range(10))
        for train, test in splits:
            assert len(test) == 2 and sorted(np.asarray(labels)[test].tolist()) == [0, 1]
            assert set(train).isdisjoint(test)

    def test_split_depends_on_seed_only(self):
        labels = [0, 1] * 6
        a = kfold_split(labels, 3, seed=4)
        b = kfold_split(labels, 3, seed=4)
        assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))

    def test_too_few_subjects(self):
        with pytest.raises(DataError):
            kfold_split([0, 1], 5, seed=0)

    def test_every_class_smaller_than_folds(self):
        with pytest.raises(DataError) as exc:
            kfold_split([0, 1, 2, 3, 4, 5], 3, seed=0)
        assert exc.value.details == {"folds": 3}

    def test_summarize_mean_and_population_std(self):
        runs = pd.DataFrame([
            {"arm": "B", "fold": 0, "repeat": 0, "acc": 0.5, "auc": 0.6, "spe": 0.7, "sen": 0.5, "f1": 0.4},
            {"arm": "B", "fold": 1, "repeat": 0, "acc": 0.7, "auc": 0.8, "spe": 0.7, "sen": 0.7, "f1": 0.6},
            {"arm": "BWG", "fold": 0, "repeat": 0, "acc": 0.9, "auc": 0.9, "spe": 0.9, "sen": 0.9, "f1": 0.9},
        ])
        summary = summarize(runs)
        b = summary[summary["arm"] == "B"].set_index("stat")
        assert b.loc["mean", "acc"] == pytest.approx(0.6)
        assert b.loc["std", "acc"] == pytest.approx(0.1)
        assert b.loc["std", "spe"] == pytest.approx(0.0)
        bwg = summary[summary["arm"] == "BWG"].set_index("stat")
        assert bwg.loc["std", "f1"] == pytest.approx(0.0)
        assert list(summary.columns) == ["arm", "stat"] + METRIC_NAMES

    def test_arm_config_changes_only_the_arm(self, small_config):
        for arm in ("B", "BW", "BG", "BWG"):
            cfg = arm_config(small_config, arm)
            a = cfg.model_dump(by_alias=True)
            b = small_config.model_dump(by_alias=True)
            assert a.pop("train.arm") == arm
            b.pop("train.arm")
            assert a == b
        with pytest.raises(DataError):
            arm_config(small_config, "W")

    def test_modality_label(self):
        assert modality_label(None) == "all"
        assert modality_label([0, 2]) == "0+2"


class TestTraining:
    """train_model and predict on the small synthetic set."""

    def test_history_and_log(self, dataset, embeddings, small_config, tmp_path):
        model = build_model(dataset, embeddings, small_config)
        log = tmp_path / "logs" / "train.jsonl"
        history = train_model(model, dataset.subjects, small_config.train(), log_path=log)
        assert [r.epoch for r in history] == [0, 1, 2]
        assert all(np.isfinite(r.train_loss) for r in history)
        lines = [json.loads(line) for line in log.read_text().splitlines()]
        assert lines[0] == history[0].to_dict()

    def test_training_updates_parameters(self, dataset, embeddings, small_config):
        model = build_model(dataset, embeddings, small_config)
        before = model.state_dict()
        train_model(model, dataset.subjects[:4], small_config.with_values(**{"train.epochs": 1}).train())
        changed = [n for n, v in model.state_dict().items() if not np.array_equal(v, before[n])]
        assert "head.weight" in changed
        assert any(n.startswith("tokenizer.") for n in changed)

    def test_training_is_deterministic(self, dataset, embeddings, small_config):
        states = []
        for _ in range(2):
            model = build_model(dataset, embeddings, small_config)
            train_model(model, dataset.subjects[:4], small_config.train())
            states.append(model.state_dict())
        for name, values in states[0].items():
            np.testing.assert_array_equal(values, states[1][name])

    def test_frozen_encoder_unchanged(self, dataset, embeddings, small_config):
        cfg = small_config.with_values(**{"encoder.frozen": True, "train.epochs": 1})
        model = build_model(dataset, embeddings, cfg)
        before = model.encoder.state_dict()
        train_model(model, dataset.subjects[:4], cfg.train())
        for name, values in model.encoder.state_dict().items():
            np.testing.assert_array_equal(values, before[name])

    @pytest.mark.parametrize("seed", range(5))
    def test_every_stage_receives_gradient(self, dataset, embeddings, small_config, seed):
        model = build_model(dataset, embeddings, small_config.with_values(seed=seed))
        with Tape() as tape:
            loss = subject_loss(model, dataset.subjects[seed])
        tape.backward(loss)
        params = model.named_parameters()
        stages = {
            "patch projection": [n for n in params if n.startswith("tokenizer.proj_") and "bias" not in n],
            "alignment": ["tokenizer.align"],
            "position": [n for n in params if n.startswith("tokenizer.pos_")],
            "modality": ["tokenizer.modality"],
            "concept projector": ["projector.weight"],
            "graph": [n for n in params if n.startswith("graph.")],
            "head": ["head.weight"],
        }
        for stage, names in stages.items():
            assert names, stage
            for name in names:
                grad = params[name].grad
                assert grad is not None and np.abs(grad).max() > 0, f"{stage}: {name}"

    def test_training_loss_halves(self, dataset, embeddings, small_config):
        """Median over three seeds of the last epoch's loss is under half the first epoch's."""
        ratios = []
        for seed in range(3):
            cfg = small_config.with_values(**{"seed": seed, "train.epochs": 25, "train.decay_epochs": [20]})
            history = train_model(build_model(dataset, embeddings, cfg), dataset.subjects, cfg.train())
            ratios.append(history[-1].train_loss / history[0].train_loss)
        assert np.median(ratios) < 0.5

    def test_predict_is_label_free(self, dataset, embeddings, small_config):
        model = build_model(dataset, embeddings, small_config)
        preds = predict(model, dataset.subjects[:3])
        assert not model.training
        assert preds.subject_ids == [s.subject_id for s in dataset.subjects[:3]]
        assert preds.score_matrix().shape == (3, 3)
        np.testing.assert_allclose(preds.score_matrix().sum(axis=1), np.ones(3), atol=1e-6)
        assert all(0 <= c < 3 for c in preds.inferred)


class TestCrossValidation:
    def test_one_row_per_run(self, dataset, embeddings, small_config):
        runs = cross_validate(dataset, small_config, embeddings)
        assert list(runs.columns) == RUN_COLUMNS
        assert len(runs) == 2
        assert runs["fold"].tolist() == [0, 1]
        assert runs["arm"].unique().tolist() == ["BWG"]
        assert runs[METRIC_NAMES].apply(lambda c: c.between(0, 1).all()).all()

    def test_modality_ablation_groups(self, dataset, embeddings, small_config):
        result = run_modality_ablation(dataset, small_config.with_values(**{"train.epochs": 1}), embeddings)
        assert result.runs["modalities"].unique().tolist() == ["0", "1", "0+1"]
        assert set(result.summary["stat"]) == {"mean", "std"}
