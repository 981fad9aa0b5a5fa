"""Paired dataset assembly, normalization and storage."""

from .builder import build_dataset
from .models import FORMAT_VERSION, DatasetManifest, ExampleRecord, Label, Split, SplitAssignment
from .splits import assign_splits, build_records, split_sizes
from .store import (
    denormalize,
    normalize,
    read_dataset,
    split_arrays,
    write_dataset,
    write_manifest_json,
)

__all__ = [
    "FORMAT_VERSION",
    "DatasetManifest",
    "ExampleRecord",
    "Label",
    "Split",
    "SplitAssignment",
    "assign_splits",
    "build_dataset",
    "build_records",
    "denormalize",
    "normalize",
    "read_dataset",
    "split_arrays",
    "split_sizes",
    "write_dataset",
    "write_manifest_json",
]
