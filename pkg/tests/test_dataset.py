"""Tests for split assignment, normalization and the binary dataset format."""

import struct
from pathlib import Path
from typing import Dict, List, Set, Tuple

import numpy as np
import pytest

from warm_freeze.attacks.injector import make_pairs
from warm_freeze.config.models import AttackKind, RunConfig
from warm_freeze.dataset import (
    DatasetManifest,
    ExampleRecord,
    Label,
    Split,
    assign_splits,
    build_dataset,
    build_records,
    denormalize,
    normalize,
    read_dataset,
    split_arrays,
    split_sizes,
    write_dataset,
)
from warm_freeze.dataset.store import decode_dataset, encode_dataset
from warm_freeze.exceptions import (
    ArtifactError,
    DatasetFormatError,
    MagicMismatchError,
    NormalizationError,
    SplitError,
    VersionMismatchError,
)
from warm_freeze.simulation.conditions import ConditionSummary, WeatherRegime
from warm_freeze.simulation.diode import DiodeParams
from warm_freeze.simulation.generator import NormalSnippet, generate_corpus


def synthetic_records(
    n_ids: int, rng: np.random.Generator
) -> Tuple[List[ExampleRecord], DatasetManifest]:
    """Paired records over synthetic normal traces, without running the simulator."""
    corpus = [
        NormalSnippet(
            id=i,
            samples=20.0 + 5.0 * rng.random() + 0.05 * rng.standard_normal(300),
            condition=ConditionSummary(WeatherRegime.CLEAR, 800.0, 40.0),
            seed_path=f"9/{i}/snippet",
        )
        for i in range(n_ids)
    ]
    assignment = assign_splits([s.id for s in corpus], (0.70, 0.15, 0.15), 42)
    records = build_records(make_pairs(corpus, AttackKind.DRIFT, 9), assignment)
    manifest = DatasetManifest(
        attack_kind="drift",
        global_seed=9,
        split_seed=42,
        corpus_size=n_ids,
        counts=assignment.counts(),
    )
    return records, manifest


class TestAssignSplits:
    """Tests for leak-free split assignment."""

    def test_full_scale_sizes(self) -> None:
        """Test that 14,400 ids split into 10,080 / 2,160 / 2,160."""
        assert split_sizes(14_400, (0.70, 0.15, 0.15)) == (10_080, 2_160, 2_160)

    def test_desk_scale_sizes(self) -> None:
        """Test that 1,200 ids split into 840 / 180 / 180."""
        assignment = assign_splits(list(range(1_200)))
        assert assignment.counts() == {"train": 840, "val": 180, "test": 180}

    def test_all_train(self) -> None:
        """Test that ratios (1, 0, 0) put every id in training."""
        assignment = assign_splits(list(range(10)), (1.0, 0.0, 0.0))
        assert assignment.ids(Split.TRAIN) == list(range(10))
        assert assignment.ids(Split.VAL) == []

    def test_deterministic(self) -> None:
        """Test that the same split seed yields the same partition."""
        a = assign_splits(list(range(100)), split_seed=3)
        b = assign_splits(list(range(100)), split_seed=3)
        c = assign_splits(list(range(100)), split_seed=4)
        assert a.id_to_split == b.id_to_split
        assert a.id_to_split != c.id_to_split

    def test_empty_ids_rejected(self) -> None:
        """Test that an empty id list is an error."""
        with pytest.raises(SplitError, match="empty"):
            assign_splits([])

    def test_duplicate_ids_rejected(self) -> None:
        """Test that duplicated ids are an error."""
        with pytest.raises(SplitError, match="distinct"):
            assign_splits([1, 2, 2])

    def test_bad_ratios_rejected(self) -> None:
        """Test that ratios must sum to one."""
        with pytest.raises(SplitError, match="summing to 1"):
            assign_splits([1, 2, 3], (0.5, 0.2, 0.2))


class TestBuildRecords:
    """Tests for pairing records and their split invariants."""

    def test_no_leakage_and_balance(self, rng: np.random.Generator) -> None:
        """Test that twins share a split and every split is label-balanced."""
        records, _ = synthetic_records(60, rng)
        split_of = {}
        for record in records:
            assert split_of.setdefault(record.id, record.split) == record.split
        for split in Split:
            labels = [r.label for r in records if r.split == split]
            assert labels.count(Label.NORMAL) == labels.count(Label.ATTACKED)

    def test_normal_twin_first(self, rng: np.random.Generator) -> None:
        """Test record order: by id, normal before attacked."""
        records, _ = synthetic_records(5, rng)
        assert [(r.id, r.label) for r in records[:4]] == [
            (0, Label.NORMAL),
            (0, Label.ATTACKED),
            (1, Label.NORMAL),
            (1, Label.ATTACKED),
        ]

    def test_split_arrays_shapes(self, rng: np.random.Generator) -> None:
        """Test network-ready arrays of one split."""
        records, manifest = synthetic_records(20, rng)
        x, y, ids = split_arrays(records, Split.TRAIN)
        assert x.shape == (2 * manifest.counts["train"], 1, 300)
        assert y.shape == ids.shape == (2 * manifest.counts["train"],)
        assert set(y.tolist()) == {0, 1}


class TestNormalize:
    """Tests for training-statistics normalization."""

    def test_training_split_standardized(self, rng: np.random.Generator) -> None:
        """Test that training samples end with mean 0 and std 1."""
        records, manifest = synthetic_records(40, rng)
        normalized, updated = normalize(records, manifest)
        train = np.concatenate([r.samples for r in normalized if r.split == Split.TRAIN])
        assert abs(train.mean()) < 1e-9
        assert abs(train.std() - 1.0) < 1e-9
        assert updated.mean is not None and updated.std is not None

    def test_denormalize_recovers_volts(self, rng: np.random.Generator) -> None:
        """Test that de-normalization recovers raw samples of every split."""
        records, manifest = synthetic_records(40, rng)
        normalized, updated = normalize(records, manifest)
        restored = denormalize(normalized, updated)
        for original, back in zip(records, restored):
            np.testing.assert_allclose(back.samples, original.samples, rtol=0, atol=1e-12)

    def test_constant_corpus_rejected(self, rng: np.random.Generator) -> None:
        """Test that a constant training split cannot be normalized."""
        records, manifest = synthetic_records(10, rng)
        flat = [
            ExampleRecord(r.id, r.label, np.full(300, 1.5), r.split) for r in records
        ]
        with pytest.raises(NormalizationError, match="constant"):
            normalize(flat, manifest)


class TestDatasetFile:
    """Tests for the binary dataset file."""

    def test_write_read_identity(self, rng: np.random.Generator, tmp_path: Path) -> None:
        """Test that a written corpus reads back bit-exactly."""
        records, manifest = normalize(*synthetic_records(5, rng))
        path = tmp_path / "drift.cdwf"
        write_dataset(records, manifest, path)

        loaded, loaded_manifest = read_dataset(path)
        assert len(loaded) == len(records) == 10
        assert loaded_manifest == manifest
        for a, b in zip(records, loaded):
            assert (a.id, a.label, a.split) == (b.id, b.label, b.split)
            assert a.samples.tobytes() == b.samples.tobytes()

    def test_repeat_writes_identical(self, rng: np.random.Generator, tmp_path: Path) -> None:
        """Test that writing the same corpus twice gives byte-identical files."""
        records, manifest = synthetic_records(8, rng)
        write_dataset(records, manifest, tmp_path / "a.cdwf")
        write_dataset(records, manifest, tmp_path / "b.cdwf")
        assert (tmp_path / "a.cdwf").read_bytes() == (tmp_path / "b.cdwf").read_bytes()

    def test_truncated_file_rejected(self, rng: np.random.Generator) -> None:
        """Test that a truncated body is an error, not silent corruption."""
        blob = encode_dataset(*synthetic_records(4, rng))
        with pytest.raises(DatasetFormatError, match="body"):
            decode_dataset(blob[:-100])
        with pytest.raises(DatasetFormatError, match="truncated"):
            decode_dataset(blob[:6])

    def test_bad_magic_rejected(self, rng: np.random.Generator) -> None:
        """Test that a foreign file is rejected by its magic bytes."""
        blob = encode_dataset(*synthetic_records(4, rng))
        with pytest.raises(MagicMismatchError):
            decode_dataset(b"XXXX" + blob[4:])

    def test_version_mismatch_rejected(self, rng: np.random.Generator) -> None:
        """Test that an unknown format version is rejected with its number."""
        blob = encode_dataset(*synthetic_records(4, rng))
        patched = blob[:4] + struct.pack("<I", 99) + blob[8:]
        with pytest.raises(VersionMismatchError) as exc_info:
            decode_dataset(patched)
        assert exc_info.value.found == 99

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test that reading a missing file is an artifact error."""
        with pytest.raises(ArtifactError):
            read_dataset(tmp_path / "missing.cdwf")

    def test_manifest_count_mismatch_rejected(self, rng: np.random.Generator) -> None:
        """Test that records and manifest counts must agree."""
        records, manifest = synthetic_records(4, rng)
        with pytest.raises(DatasetFormatError, match="Manifest describes"):
            encode_dataset(records[:-1], manifest)

    def test_manifest_unknown_split_tag_rejected(self, rng: np.random.Generator) -> None:
        """Test that manifest counts must be keyed by train, val or test."""
        _, manifest = synthetic_records(4, rng)
        data = manifest.to_dict()
        assert DatasetManifest.from_dict(data).counts == manifest.counts

        data["counts"] = {**data["counts"], "holdout": 1}
        with pytest.raises(KeyError):
            DatasetManifest.from_dict(data)


class TestBuildDataset:
    """Tests for end-to-end dataset assembly."""

    def test_small_corpus(self, tiny_run_config: RunConfig) -> None:
        """Test counts, balance and determinism of a simulated corpus."""
        config = tiny_run_config.model_copy(
            update={"dataset": tiny_run_config.dataset.model_copy(update={"corpus_size": 20})}
        )
        records, manifest = build_dataset(config, AttackKind.BIAS)
        again, _ = build_dataset(config, AttackKind.BIAS)

        assert manifest.counts == {"train": 14, "val": 3, "test": 3}
        assert manifest.attack_kind == "bias"
        assert len(records) == 40
        assert encode_dataset(records, manifest) == encode_dataset(again, manifest)


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(AttackKind))
def test_desk_corpus_properties(kind: AttackKind, tmp_path: Path) -> None:
    """Test the default 1,200-id corpus: sizes, balance, leakage, untouched samples, ranges."""
    config = RunConfig.model_validate({"output_dir": str(tmp_path)})
    records, manifest = build_dataset(config, kind)

    assert manifest.counts == {"train": 840, "val": 180, "test": 180}
    assert len(records) == 2_400
    for split in Split:
        labels = [r.label for r in records if r.split == split]
        assert labels.count(Label.NORMAL) == labels.count(Label.ATTACKED)
        assert labels.count(Label.NORMAL) == manifest.counts[split.tag]
    splits_by_id: Dict[int, Set[Split]] = {}
    for record in records:
        splits_by_id.setdefault(record.id, set()).add(record.split)
    assert len(splits_by_id) == 1_200
    assert all(len(s) == 1 for s in splits_by_id.values())

    corpus = generate_corpus(
        config.seed, 1_200, DiodeParams.from_config(config.simulator.diode), config.simulator
    )
    pairs = make_pairs(corpus, kind, config.seed, config.attacks)
    for normal, attacked in pairs:
        window = attacked.spec.window
        assert 30 <= window.start_idx and window.end_idx <= 270
        assert window.end_idx - window.start_idx >= 60
        assert np.array_equal(attacked.samples[:30], normal.samples[:30])
        assert np.array_equal(attacked.samples[270:], normal.samples[270:])
        assert np.array_equal(
            attacked.samples[: window.start_idx], normal.samples[: window.start_idx]
        )
        assert np.array_equal(attacked.samples[window.end_idx :], normal.samples[window.end_idx :])

        spec = attacked.spec
        if kind == AttackKind.BIAS:
            assert spec.bias_factor is not None
            assert 0.003 <= abs(spec.bias_factor) <= 0.008
        elif kind == AttackKind.DRIFT:
            assert spec.drift_magnitude is not None
            assert 0.005 <= spec.drift_magnitude <= 0.015
        else:
            assert 3 <= len(spec.spike_events) <= 10
            for event in spec.spike_events:
                assert 1 <= event.width <= 4
                assert 0.01 <= abs(event.magnitude) <= 0.20

    assignment = assign_splits(list(range(1_200)), config.dataset.ratios, config.dataset.split_seed)
    rebuilt, rebuilt_manifest = normalize(build_records(pairs, assignment), manifest)
    assert encode_dataset(rebuilt, rebuilt_manifest) == encode_dataset(records, manifest)
