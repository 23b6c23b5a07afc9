"""
Tests for the planted-signal dataset generator

Run with: python -m pytest tests/test_synthgen.py -v
"""

import numpy as np
import pytest

from mmgpl.concepts import embed_bank, load_bank
from mmgpl.dataset import load_dataset
from mmgpl.synthgen import (
    SynthSpec, ball_mask, class_names, generate, lesion_map, load_spec, subject_volumes,
    synth_concepts,
)
from mmgpl.voltok import PatchStrategy, partition, read_volume
from shared.errors import SpecError


def tiny_spec(**changes):
    values = dict(n_subjects=6, n_classes=3, dims=(16, 16, 16), n_modalities=2, n_concepts=4,
                  lesion_radius=2, signal_amplitude=1.0, noise_std=0.0, patch_size=8, seed=11)
    values.update(changes)
    return SynthSpec(**values)


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestSpecValidation:
    def test_defaults_valid(self):
        spec = SynthSpec()
        assert spec.dims == (32, 32, 32)
        assert spec.centers()[0] == [(8, 8, 8)]

    def test_lesion_leaving_volume(self):
        with pytest.raises(SpecError) as exc:
            tiny_spec(lesion_radius=5)
        assert exc.value.details["field"] == "lesion_centers"

    def test_explicit_centre_out_of_bounds(self):
        with pytest.raises(SpecError):
            tiny_spec(n_classes=2, lesion_centers=[[[4, 4, 4]], [[4, 4, 15]]])

    def test_dims_must_divide(self):
        with pytest.raises(SpecError):
            tiny_spec(dims=(16, 12, 16))

    def test_too_many_default_classes(self):
        with pytest.raises(SpecError):
            tiny_spec(n_classes=9)

    def test_centre_lists_per_class(self):
        with pytest.raises(SpecError):
            tiny_spec(n_classes=3, lesion_centers=[[[4, 4, 4]], [[12, 12, 12]]])

    def test_unknown_field(self):
        with pytest.raises(ValueError):
            SynthSpec(n_subject=3)


class TestVolumes:
    """Planted blobs and complementary modalities."""

    def test_ball_mask(self):
        mask = ball_mask((5, 5, 5), (2, 2, 2), 1)
        assert mask.sum() == 7
        assert mask[2, 2, 2] and not mask[1, 1, 2]

    def test_noise_free_centre_carries_amplitude(self):
        """Class 0 minus class 1 at the class-0 centre equals the amplitude."""
        spec = tiny_spec(signal_amplitude=2.5)
        centre = spec.centers()[0][0]
        class0 = subject_volumes(spec, 0)
        class1 = subject_volumes(spec, 1)
        diff = class0[0].voxels[centre + (0,)] - class1[0].voxels[centre + (0,)]
        assert diff == pytest.approx(2.5)
        assert class0[1].voxels[centre + (0,)] == pytest.approx(-2.5)

    def test_signal_only_inside_lesion(self):
        spec = tiny_spec()
        voxels = subject_volumes(spec, 2)[0].voxels[..., 0]
        np.testing.assert_array_equal(voxels != 0, lesion_map(spec, 2) == 1)

    def test_round_robin_labels(self):
        spec = tiny_spec()
        assert [spec.label_of(i) for i in range(6)] == [0, 1, 2, 0, 1, 2]

    def test_subject_stream_is_fixed(self):
        spec = tiny_spec(noise_std=0.5)
        a = subject_volumes(spec, 4)
        b = subject_volumes(spec, 4)
        np.testing.assert_array_equal(a[1].voxels, b[1].voxels)
        assert not np.array_equal(a[1].voxels, subject_volumes(spec, 5)[1].voxels)

    def test_planted_patch_locality(self):
        """With noise off only the patch holding the class centre is non-zero."""
        spec = tiny_spec()
        strat = PatchStrategy(patch_size=8)
        for label, expected in ((0, 0), (1, 1), (2, 2)):
            patches = partition(subject_volumes(spec, label)[0], strat).patches
            nonzero = np.flatnonzero(np.abs(patches).sum(axis=1) > 0).tolist()
            assert nonzero == [expected]

    def test_lesion_patch_beats_background_under_noise(self):
        """Amplitude four times the noise: the centre patch outshines the median patch."""
        spec = tiny_spec(noise_std=0.25, lesion_radius=3, n_subjects=9)
        strat = PatchStrategy(patch_size=8)
        for index in range(spec.n_subjects):
            label = spec.label_of(index)
            for volume in subject_volumes(spec, index):
                intensity = np.abs(partition(volume, strat).patches).mean(axis=1)
                assert intensity[label] > np.median(intensity)


class TestConcepts:
    def test_bank_shape(self):
        bank = synth_concepts(tiny_spec())
        assert bank.class_names == ["frontal cortex", "temporal lobe", "parietal gyrus"]
        assert bank.k == 4
        assert len(bank.texts()) == 12

    def test_long_banks_stay_unique(self):
        bank = synth_concepts(tiny_spec(n_concepts=8))
        texts = bank.classes[0].concepts
        assert len(set(texts)) == 8
        assert texts[6].endswith("variant 1")

    def test_within_class_concepts_closer(self):
        emb = embed_bank(synth_concepts(tiny_spec()), dim=512)
        Z = emb.Z.data
        cos = Z @ Z.T
        same = [cos[i, j] for i in range(12) for j in range(12) if i != j and i // 4 == j // 4]
        other = [cos[i, j] for i in range(12) for j in range(12) if i // 4 != j // 4]
        assert np.mean(same) > np.mean(other)

    def test_class_names_prefix(self):
        assert class_names(2) == ["frontal cortex", "temporal lobe"]

    def test_class_names_past_lexicon(self):
        names = class_names(17)
        assert len(set(names)) == 17
        assert names[8] == "frontal cortex-2" and names[16] == "frontal cortex-3"

    def test_many_classes_with_explicit_centres(self, tmp_path):
        spec = tiny_spec(n_subjects=9, n_classes=9, lesion_centers=[[(4, 4, 4)]] * 9, lesion_radius=1)
        bank = synth_concepts(spec)
        assert bank.n_classes == 9 and len(set(bank.class_names)) == 9
        assert "cortex-2" in bank.classes[8].concepts[0]
        ds = load_dataset(generate(spec, tmp_path / "out"))
        assert ds.n_classes == 9 and ds.class_names == bank.class_names
        assert load_bank(tmp_path / "out" / "concepts.json").n_classes == 9


class TestGenerate:
    """Files on disk."""

    def test_layout_and_manifest(self, tmp_path):
        spec = tiny_spec()
        manifest = generate(spec, tmp_path / "out")
        ds = load_dataset(manifest)
        assert len(ds) == 6
        assert ds.labels == [0, 1, 2, 0, 1, 2]
        assert ds.class_names == class_names(3)
        assert [v.modality_id for v in ds.subjects[0].volumes] == [0, 1]
        assert load_bank(tmp_path / "out" / "concepts.json").k == 4
        assert load_spec(tmp_path / "out" / "synth_spec.json") == spec
        with pytest.raises(SpecError):
            load_spec(tmp_path / "out" / "manifest.json.missing")
        (tmp_path / "broken.json").write_text("{", encoding="utf-8")
        with pytest.raises(SpecError):
            load_spec(tmp_path / "broken.json")
        lesion = read_volume(tmp_path / "out" / "lesions" / "class_1.mmgv")
        np.testing.assert_array_equal(lesion.voxels[..., 0], lesion_map(spec, 1))

    def test_regeneration_byte_identical(self, tmp_path):
        spec = tiny_spec(noise_std=0.3)
        generate(spec, tmp_path / "a")
        generate(spec, tmp_path / "b", workers=3)
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_seed_changes_noise(self, tmp_path):
        generate(tiny_spec(noise_std=0.3, seed=1), tmp_path / "a")
        generate(tiny_spec(noise_std=0.3, seed=2), tmp_path / "b")
        a = read_volume(tmp_path / "a" / "subjects" / "s0000" / "modality_0.mmgv").voxels
        b = read_volume(tmp_path / "b" / "subjects" / "s0000" / "modality_0.mmgv").voxels
        assert not np.array_equal(a, b)
