"""Attack descriptions and attacked snippets."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from warm_freeze.config.models import AttackKind


@dataclass(frozen=True)
class AttackWindow:
    """Interior span [start_idx, end_idx) that an attack may modify."""

    start_idx: int
    end_idx: int
    guard_samples: int

    @property
    def length(self) -> int:
        """Number of samples in the window."""
        return self.end_idx - self.start_idx

    def to_dict(self) -> Dict[str, int]:
        return {
            "start_idx": self.start_idx,
            "end_idx": self.end_idx,
            "guard_samples": self.guard_samples,
        }


@dataclass(frozen=True)
class SpikeEvent:
    """One signed impulse covering ``width`` samples from ``index``."""

    index: int
    width: int
    magnitude: float  # signed fraction of the nominal level

    @property
    def end(self) -> int:
        return self.index + self.width


@dataclass(frozen=True)
class AttackSpec:
    """Kind, window and the parameters drawn for one injected attack.

    Only the fields belonging to ``kind`` are set; the others stay at their
    empty defaults.
    """

    kind: AttackKind
    window: AttackWindow
    noise_sigma: float
    bias_factor: Optional[float] = None
    drift_magnitude: Optional[float] = None
    drift_sign: Optional[int] = None
    spike_events: Tuple[SpikeEvent, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary."""
        return {
            "kind": self.kind.value,
            "window": self.window.to_dict(),
            "noise_sigma": self.noise_sigma,
            "bias_factor": self.bias_factor,
            "drift_magnitude": self.drift_magnitude,
            "drift_sign": self.drift_sign,
            "spike_events": [
                {"index": e.index, "width": e.width, "magnitude": e.magnitude}
                for e in self.spike_events
            ],
        }


@dataclass(frozen=True)
class AttackedSnippet:
    """Attacked twin of a normal snippet; shares its id."""

    id: int
    samples: np.ndarray
    spec: AttackSpec
