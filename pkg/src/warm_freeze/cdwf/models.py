"""Data models for the warm-freeze search and its plan file."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Optional, Sequence, Tuple

from warm_freeze.exceptions import CdwfError, ConfigurationConflictError, ImportanceError

logger = logging.getLogger(__name__)

SENTINEL_RANK = 0


@dataclass(frozen=True)
class ImportanceProfile:
    """Per-block mean gradient norms and their normalized shares.

    Attributes:
        g: Mean L2 gradient norm of each block's parameters
        i: g normalized to sum to one
        n_batches: Validation batches averaged over
        batch_size: Rows per batch
    """

    g: Tuple[float, ...]
    i: Tuple[float, ...]
    n_batches: int
    batch_size: int = 0

    @classmethod
    def from_gradient_norms(
        cls, norms: Sequence[float], n_batches: int, batch_size: int = 0
    ) -> "ImportanceProfile":
        """Normalize raw norms into importances.

        Raises:
            ImportanceError: If a norm is negative or non-finite, or all are zero
        """
        g = tuple(float(v) for v in norms)
        if not g or any(not math.isfinite(v) or v < 0 for v in g):
            raise ImportanceError(f"Gradient norms must be finite and >= 0, got {g}")
        total = math.fsum(g)
        if total <= 0:
            raise ImportanceError("All block gradient norms are zero; importance is undefined")
        return cls(g=g, i=tuple(v / total for v in g), n_batches=n_batches, batch_size=batch_size)

    @property
    def n_blocks(self) -> int:
        return len(self.i)

    def ranking(self) -> Tuple[int, ...]:
        """Block indices by descending importance, lower index first on ties."""
        return tuple(sorted(range(self.n_blocks), key=lambda b: (-self.i[b], b)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gradient_norms": list(self.g),
            "importances": list(self.i),
            "n_batches": self.n_batches,
            "batch_size": self.batch_size,
        }


@dataclass(frozen=True)
class CandidateConfig:
    """Kept blocks K, frozen-with-adapter blocks F and the adapter rank.

    With F empty the rank is canonicalized to the sentinel 0.
    """

    kept: FrozenSet[int]
    frozen: FrozenSet[int]
    rank: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kept", frozenset(self.kept))
        object.__setattr__(self, "frozen", frozenset(self.frozen))
        if self.kept & self.frozen:
            raise ConfigurationConflictError(
                f"Blocks {sorted(self.kept & self.frozen)} are both kept and frozen"
            )
        if not self.frozen:
            object.__setattr__(self, "rank", SENTINEL_RANK)
        elif self.rank < 1:
            raise ConfigurationConflictError(f"Frozen blocks need a rank >= 1, got {self.rank}")

    @property
    def k(self) -> int:
        return len(self.kept)

    def architecture(self) -> str:
        """Short notation such as ``1K + 7L-r4``."""
        if not self.frozen:
            return "All trainable" if self.kept else "Head only"
        if not self.kept:
            return f"All LoRA-r{self.rank}"
        return f"{self.k}K + {len(self.frozen)}L-r{self.rank}"


@dataclass(frozen=True)
class CalibrationRecord:
    """Warm-start and reference validation accuracies."""

    a_warm: float
    a_ref: float

    def __post_init__(self) -> None:
        for name, value in (("a_warm", self.a_warm), ("a_ref", self.a_ref)):
            if not 0.0 <= value <= 1.0:
                raise CdwfError(f"{name} must lie in [0, 1], got {value}")

    @property
    def g_max(self) -> float:
        """Reference improvement over warm-start; may be negative."""
        return self.a_ref - self.a_warm

    @property
    def effective_g_max(self) -> float:
        """g_max clamped at zero, as used by the predictor."""
        return max(self.g_max, 0.0)


@dataclass(frozen=True)
class CdwfPlan:  # pylint: disable=too-many-instance-attributes
    """Selected configuration with everything needed to audit the choice."""

    config: CandidateConfig
    predicted_accuracy: float
    trainable_fraction: float
    p_train: int
    p_total: int
    importance: ImportanceProfile
    calibration: CalibrationRecord
    f_max: float
    eps_gain: float
    seed: int = 0
    forced_rank: Optional[int] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.trainable_fraction > self.f_max:
            raise CdwfError(
                f"Plan fraction {self.trainable_fraction} exceeds budget {self.f_max}"
            )

    def to_dict(self) -> Dict[str, Any]:
        """JSON form of the plan."""
        return {
            "kept": sorted(self.config.kept),
            "frozen": sorted(self.config.frozen),
            "rank": self.config.rank,
            "architecture": self.config.architecture(),
            "a_warm": self.calibration.a_warm,
            "a_ref": self.calibration.a_ref,
            "g_max": self.calibration.g_max,
            "importances": list(self.importance.i),
            "gradient_norms": list(self.importance.g),
            "n_batches": self.importance.n_batches,
            "batch_size": self.importance.batch_size,
            "predicted_accuracy": self.predicted_accuracy,
            "trainable_fraction": self.trainable_fraction,
            "p_train": self.p_train,
            "p_total": self.p_total,
            "f_max": self.f_max,
            "eps_gain": self.eps_gain,
            "seed": self.seed,
            "forced_rank": self.forced_rank,
            "extra": dict(self.extra),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CdwfPlan":
        """Rebuild a plan from its JSON form.

        Raises:
            CdwfError: If a field is missing or inconsistent
        """
        try:
            importance = ImportanceProfile(
                g=tuple(float(v) for v in data["gradient_norms"]),
                i=tuple(float(v) for v in data["importances"]),
                n_batches=int(data["n_batches"]),
                batch_size=int(data.get("batch_size", 0)),
            )
            return cls(
                config=CandidateConfig(
                    frozenset(data["kept"]), frozenset(data["frozen"]), int(data["rank"])
                ),
                predicted_accuracy=float(data["predicted_accuracy"]),
                trainable_fraction=float(data["trainable_fraction"]),
                p_train=int(data["p_train"]),
                p_total=int(data["p_total"]),
                importance=importance,
                calibration=CalibrationRecord(float(data["a_warm"]), float(data["a_ref"])),
                f_max=float(data["f_max"]),
                eps_gain=float(data["eps_gain"]),
                seed=int(data.get("seed", 0)),
                forced_rank=data.get("forced_rank"),
                extra=dict(data.get("extra", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CdwfError(f"Malformed plan: {e}") from e
