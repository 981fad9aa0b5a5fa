"""Data models for the paired dataset."""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

FORMAT_VERSION = 1


class Split(IntEnum):
    """Dataset split; the integer value is the on-disk code."""

    TRAIN = 0
    VAL = 1
    TEST = 2

    @property
    def tag(self) -> str:
        return self.name.lower()

    @classmethod
    def from_tag(cls, tag: str) -> "Split":
        """Split for a tag such as ``"val"``; unknown tags raise KeyError."""
        return cls[tag.upper()]


class Label(IntEnum):
    NORMAL = 0
    ATTACKED = 1


@dataclass(frozen=True)
class SplitAssignment:
    """Which split every snippet id belongs to.

    Attributes:
        id_to_split: Snippet id to split; both twins of a pair share it
        ratios: (train, val, test) fractions
        split_seed: Seed of the id shuffle
    """

    id_to_split: Dict[int, Split]
    ratios: Tuple[float, float, float]
    split_seed: int

    def ids(self, split: Split) -> List[int]:
        """Ids in a split, ascending."""
        return sorted(i for i, s in self.id_to_split.items() if s == split)

    def counts(self) -> Dict[str, int]:
        """Pair counts per split tag."""
        result = {s.tag: 0 for s in Split}
        for s in self.id_to_split.values():
            result[s.tag] += 1
        return result


@dataclass(frozen=True)
class ExampleRecord:
    """One labelled 300-sample example."""

    id: int
    label: Label
    samples: np.ndarray
    split: Split


@dataclass
class DatasetManifest:  # pylint: disable=too-many-instance-attributes
    """Provenance and normalization of a stored dataset.

    Attributes:
        attack_kind: Attack family of the attacked twins
        global_seed: Seed used for simulation and injection
        split_seed: Seed of the split shuffle
        corpus_size: Number of snippet ids
        counts: Pair counts per split tag
        mean: Training-split sample mean used for normalization
        std: Training-split sample standard deviation (population)
        format_version: Binary layout version
        easy: Whether widened illustration magnitudes were used
    """

    attack_kind: str
    global_seed: int
    split_seed: int
    corpus_size: int
    counts: Dict[str, int] = field(default_factory=dict)
    mean: Optional[float] = None
    std: Optional[float] = None
    format_version: int = FORMAT_VERSION
    easy: bool = False

    @property
    def n_records(self) -> int:
        """Records in the file: two per pair."""
        return 2 * sum(self.counts.values())

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "attack_kind": self.attack_kind,
            "global_seed": self.global_seed,
            "split_seed": self.split_seed,
            "corpus_size": self.corpus_size,
            "counts": dict(self.counts),
            "normalization": {"mean": self.mean, "std": self.std},
            "format_version": self.format_version,
            "easy": self.easy,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetManifest":
        """Create a manifest from its JSON form.

        Raises:
            KeyError: If a required field is missing or a split tag is unknown
        """
        normalization = data.get("normalization") or {}
        return cls(
            attack_kind=data["attack_kind"],
            global_seed=int(data["global_seed"]),
            split_seed=int(data["split_seed"]),
            corpus_size=int(data["corpus_size"]),
            counts={Split.from_tag(str(k)).tag: int(v) for k, v in data["counts"].items()},
            mean=normalization.get("mean"),
            std=normalization.get("std"),
            format_version=int(data["format_version"]),
            easy=bool(data.get("easy", False)),
        )
