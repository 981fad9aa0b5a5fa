"""Normalization and the binary dataset file format.

File layout (all integers little-endian)::

    b"CDWF" | u32 format_version | u32 manifest_length | manifest (UTF-8 JSON)
    | records: u32 id, u8 label, u8 split, 300 x f64 samples (packed, 2406 bytes)

The manifest is written with sorted keys, so identical corpora produce
identical files.
"""

import dataclasses
import json
import logging
import struct
from typing import List, Sequence, Tuple

import numpy as np

from warm_freeze.artifacts import PathLike, atomic_write_bytes, read_bytes, write_json
from warm_freeze.dataset.models import (
    FORMAT_VERSION,
    DatasetManifest,
    ExampleRecord,
    Label,
    Split,
)
from warm_freeze.exceptions import (
    DatasetFormatError,
    MagicMismatchError,
    NormalizationError,
    VersionMismatchError,
)

logger = logging.getLogger(__name__)

MAGIC = b"CDWF"
SAMPLES_PER_RECORD = 300
_HEADER = struct.Struct("<4sII")
RECORD_DTYPE = np.dtype(
    [("id", "<u4"), ("label", "u1"), ("split", "u1"), ("samples", "<f8", (SAMPLES_PER_RECORD,))]
)


def training_statistics(records: Sequence[ExampleRecord]) -> Tuple[float, float]:
    """Mean and population std over every training-split sample.

    Raises:
        NormalizationError: If the training split is empty or constant
    """
    train = [r.samples for r in records if r.split == Split.TRAIN]
    if not train:
        raise NormalizationError("Training split is empty; cannot compute normalization")
    values = np.concatenate(train)
    mean = float(np.mean(values))
    std = float(np.std(values))
    if not std > 0:
        raise NormalizationError("Training samples are constant (std = 0)")
    return mean, std


def normalize(
    records: Sequence[ExampleRecord], manifest: DatasetManifest
) -> Tuple[List[ExampleRecord], DatasetManifest]:
    """Standardize every record with training-split statistics.

    Returns:
        Normalized records and a manifest carrying (mean, std)

    Raises:
        NormalizationError: If the training statistics are degenerate
    """
    mean, std = training_statistics(records)
    normalized = [dataclasses.replace(r, samples=(r.samples - mean) / std) for r in records]
    logger.info("Normalized %d records with train mean=%.6f std=%.6f", len(records), mean, std)
    return normalized, dataclasses.replace(manifest, mean=mean, std=std)


def denormalize(
    records: Sequence[ExampleRecord], manifest: DatasetManifest
) -> List[ExampleRecord]:
    """Map normalized records back to volts.

    Raises:
        NormalizationError: If the manifest has no statistics
    """
    if manifest.mean is None or manifest.std is None:
        raise NormalizationError("Manifest carries no normalization statistics")
    return [
        dataclasses.replace(r, samples=r.samples * manifest.std + manifest.mean) for r in records
    ]


def _manifest_bytes(manifest: DatasetManifest) -> bytes:
    return json.dumps(manifest.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_dataset(records: Sequence[ExampleRecord], manifest: DatasetManifest) -> bytes:
    """Serialize records and manifest to the binary layout.

    Raises:
        DatasetFormatError: If a record does not have 300 finite samples or the
            manifest counts disagree with the records
    """
    if len(records) != manifest.n_records:
        raise DatasetFormatError(
            f"Manifest describes {manifest.n_records} records but {len(records)} were given"
        )
    for record in records:
        samples = np.asarray(record.samples)
        if samples.shape != (SAMPLES_PER_RECORD,) or not np.all(np.isfinite(samples)):
            raise DatasetFormatError(
                f"Record {record.id} must hold {SAMPLES_PER_RECORD} finite samples"
            )
    table = np.zeros(len(records), dtype=RECORD_DTYPE)
    if records:
        table["id"] = [r.id for r in records]
        table["label"] = [int(r.label) for r in records]
        table["split"] = [int(r.split) for r in records]
        table["samples"] = np.stack([np.asarray(r.samples, dtype=np.float64) for r in records])

    manifest_blob = _manifest_bytes(manifest)
    header = _HEADER.pack(MAGIC, manifest.format_version, len(manifest_blob))
    return header + manifest_blob + table.tobytes()


def decode_dataset(blob: bytes) -> Tuple[List[ExampleRecord], DatasetManifest]:
    """Parse the binary layout.

    Raises:
        MagicMismatchError: If the file does not start with b"CDWF"
        VersionMismatchError: If the format version is unsupported
        DatasetFormatError: If the file is truncated or inconsistent
    """
    if len(blob) < _HEADER.size:
        raise DatasetFormatError(f"Dataset file truncated: {len(blob)} bytes")
    magic, version, manifest_length = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MagicMismatchError(f"Bad dataset magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"Unsupported dataset format version {version}", version, FORMAT_VERSION
        )
    body_start = _HEADER.size + manifest_length
    if len(blob) < body_start:
        raise DatasetFormatError("Dataset file truncated inside the manifest")
    try:
        manifest = DatasetManifest.from_dict(
            json.loads(blob[_HEADER.size : body_start].decode("utf-8"))
        )
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(f"Malformed dataset manifest: {e}") from e

    body = blob[body_start:]
    if len(body) != manifest.n_records * RECORD_DTYPE.itemsize:
        raise DatasetFormatError(
            f"Dataset body holds {len(body)} bytes, expected "
            f"{manifest.n_records} records of {RECORD_DTYPE.itemsize} bytes"
        )
    table = np.frombuffer(body, dtype=RECORD_DTYPE)
    try:
        records = [
            ExampleRecord(
                id=int(row["id"]),
                label=Label(int(row["label"])),
                samples=np.array(row["samples"], dtype=np.float64),
                split=Split(int(row["split"])),
            )
            for row in table
        ]
    except ValueError as e:
        raise DatasetFormatError(f"Invalid label or split code: {e}") from e
    return records, manifest


def write_dataset(
    records: Sequence[ExampleRecord], manifest: DatasetManifest, path: PathLike
) -> None:
    """Write a dataset file atomically."""
    blob = encode_dataset(records, manifest)
    atomic_write_bytes(path, blob)
    logger.info("Wrote %d records (%d bytes) to %s", len(records), len(blob), path)


def read_dataset(path: PathLike) -> Tuple[List[ExampleRecord], DatasetManifest]:
    """Read a dataset file written by :func:`write_dataset`.

    Raises:
        ArtifactError: If the file is missing
        DatasetFormatError: If the contents are malformed
    """
    records, manifest = decode_dataset(read_bytes(path))
    logger.debug("Read %d records from %s", len(records), path)
    return records, manifest


def write_manifest_json(manifest: DatasetManifest, path: PathLike) -> None:
    """Export the manifest as a standalone JSON file for inspection."""
    write_json(path, manifest.to_dict())


def split_arrays(
    records: Sequence[ExampleRecord], split: Split
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Network inputs for one split.

    Returns:
        (x of shape (n, 1, 300), labels of shape (n,), ids of shape (n,))
    """
    selected = [r for r in records if r.split == split]
    if not selected:
        empty = np.zeros((0, 1, SAMPLES_PER_RECORD))
        return empty, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    x = np.stack([r.samples for r in selected])[:, np.newaxis, :]
    y = np.array([int(r.label) for r in selected], dtype=np.int64)
    ids = np.array([r.id for r in selected], dtype=np.int64)
    return x, y, ids
