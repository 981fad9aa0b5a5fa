"""Data models for per-method results and the assembled run report."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from warm_freeze.exceptions import ArtifactError

KIND_ORDER = {"full": 0, "cdwf": 1, "lora": 2}


@dataclass
class MethodResult:  # pylint: disable=too-many-instance-attributes
    """Raw outcome of one trained method, persisted by the command that produced it.

    Derived columns (retention, reduction, percentages) are never stored here;
    the report recomputes them from these fields.

    Attributes:
        method: Row label, unique within a report (e.g. "cdwf@0.05")
        kind: "full", "cdwf" or "lora"
        attack_kind: Target task
        seed: Run seed
        test_acc: Test accuracy (fraction)
        test_auc: Test ROC-AUC (fraction)
        n_test: Test examples evaluated
        p_train: Trainable parameters
        p_total: Base parameters of the network
        architecture: Short configuration notation
        chosen_k: Kept blocks (CDWF rows)
        chosen_r: Adapter rank (CDWF and LoRA rows)
        budget: f_max (CDWF rows)
        predicted_accuracy: Predicted validation accuracy (CDWF rows)
        realised_accuracy: Final validation accuracy
        e_warm: Warm-start epochs (CDWF rows)
        wall_time: Training seconds
        history: Per-epoch records as dicts (phase, epoch, train_loss, val_accuracy)
        importances: Block importances behind the choice (CDWF rows)
        kept: Kept block indices (CDWF rows)
        frozen: Adapted block indices (CDWF and LoRA rows)
    """

    method: str
    kind: str
    attack_kind: str
    seed: int
    test_acc: float
    test_auc: float
    n_test: int
    p_train: int
    p_total: int
    architecture: str
    chosen_k: Optional[int] = None
    chosen_r: Optional[int] = None
    budget: Optional[float] = None
    predicted_accuracy: Optional[float] = None
    realised_accuracy: Optional[float] = None
    e_warm: Optional[int] = None
    wall_time: float = 0.0
    history: List[Dict[str, Any]] = field(default_factory=list)
    importances: List[float] = field(default_factory=list)
    kept: List[int] = field(default_factory=list)
    frozen: List[int] = field(default_factory=list)

    def sort_key(self) -> tuple:
        """Stable report order: full FT, then CDWF by budget, then LoRA by rank."""
        return (
            KIND_ORDER.get(self.kind, len(KIND_ORDER)),
            self.e_warm if self.e_warm is not None else 0,
            self.budget if self.budget is not None else 0.0,
            self.chosen_r if self.chosen_r is not None else 0,
            self.method,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "method": self.method,
            "kind": self.kind,
            "attack_kind": self.attack_kind,
            "seed": self.seed,
            "test_acc": self.test_acc,
            "test_auc": self.test_auc,
            "n_test": self.n_test,
            "p_train": self.p_train,
            "p_total": self.p_total,
            "architecture": self.architecture,
            "chosen_k": self.chosen_k,
            "chosen_r": self.chosen_r,
            "budget": self.budget,
            "predicted_accuracy": self.predicted_accuracy,
            "realised_accuracy": self.realised_accuracy,
            "e_warm": self.e_warm,
            "wall_time": self.wall_time,
            "history": list(self.history),
            "importances": list(self.importances),
            "kept": list(self.kept),
            "frozen": list(self.frozen),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MethodResult":
        """Create from a dictionary written by :meth:`to_dict`.

        Raises:
            ArtifactError: If a required field is missing
        """
        try:
            return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})
        except TypeError as e:
            raise ArtifactError(f"Malformed method result: {e}") from e


@dataclass(frozen=True)
class ReportRow:  # pylint: disable=too-many-instance-attributes
    """One table row with derived columns."""

    method: str
    test_acc: float
    test_auc: float
    retention: float
    param_count: int
    param_reduction: float
    chosen_k: Optional[int]
    chosen_r: Optional[int]
    trainable_pct: float
    architecture: str
    predicted_accuracy: Optional[float] = None
    prediction_error: Optional[float] = None
    wall_time: Optional[float] = None

    def to_dict(self, include_wall_time: bool = False) -> Dict[str, Any]:
        data = {
            "method": self.method,
            "test_acc": self.test_acc,
            "test_auc": self.test_auc,
            "retention": self.retention,
            "param_count": self.param_count,
            "param_reduction": self.param_reduction,
            "chosen_k": self.chosen_k,
            "chosen_r": self.chosen_r,
            "trainable_pct": self.trainable_pct,
            "architecture": self.architecture,
            "predicted_accuracy": self.predicted_accuracy,
            "prediction_error": self.prediction_error,
        }
        if include_wall_time:
            data["wall_time"] = self.wall_time
        return data


@dataclass
class RunReport:
    """Rows plus the configuration echo and artifact hashes they came from."""

    rows: List[ReportRow]
    config: Dict[str, Any]
    artifacts: Dict[str, str]
    include_wall_time: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": [r.to_dict(self.include_wall_time) for r in self.rows],
            "config": self.config,
            "artifacts": self.artifacts,
        }
