"""Pydantic models for configuration validation.

These models provide strong type validation and automatic coercion
for all configuration sections. Defaults mirror the reference experimental
setup (seed 42, batch 64, AdamW at 3e-4 / 1e-2, 3 warm + 7 fine-tune epochs).
"""

from __future__ import annotations

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


class AttackKind(str, Enum):
    """Attack families injected into normal snippets."""

    BIAS = "bias"
    DRIFT = "drift"
    SPIKE = "spike"


class DiodeParamsConfig(BaseModel):
    """Five-parameter single-diode module description at standard test conditions."""

    i_ph_stc: float = Field(default=8.21, gt=0, description="Photocurrent at STC (A)")
    i_0: float = Field(default=9.825e-8, gt=0, description="Diode saturation current (A)")
    n: float = Field(default=1.3, ge=1.0, le=2.0, description="Diode ideality factor")
    r_s: float = Field(default=0.221, gt=0, description="Series resistance (Ω)")
    r_sh: float = Field(default=415.405, gt=0, description="Shunt resistance (Ω)")
    n_cells: int = Field(default=54, gt=0, description="Cells in series")
    v_oc_approx: float = Field(default=32.9, gt=0, description="Open-circuit voltage estimate (V)")

    @model_validator(mode="after")
    def validate_resistances(self) -> "DiodeParamsConfig":
        """Shunt resistance must dominate series resistance."""
        if self.r_sh <= self.r_s:
            raise ValueError(f"r_sh ({self.r_sh}) must exceed r_s ({self.r_s})")
        return self


class SimulatorConfig(BaseModel):
    """PV snippet synthesis configuration."""

    sample_rate_hz: int = Field(default=30, gt=0, description="Samples per second")
    duration_s: int = Field(default=10, gt=0, description="Snippet duration in seconds")
    noise_sigma: float = Field(
        default=0.002, ge=0, description="Sensor noise std as a fraction of the nominal level"
    )
    diode: DiodeParamsConfig = Field(default_factory=DiodeParamsConfig)

    @model_validator(mode="after")
    def validate_length(self) -> "SimulatorConfig":
        """Snippets are fixed at 300 samples."""
        if self.sample_rate_hz * self.duration_s != 300:
            raise ValueError(
                f"sample_rate_hz * duration_s must equal 300, got "
                f"{self.sample_rate_hz} * {self.duration_s}"
            )
        return self


def _check_range(name: str, value: Tuple[float, float]) -> Tuple[float, float]:
    low, high = value
    if low < 0 or high < low:
        raise ValueError(f"{name} must satisfy 0 <= low <= high, got {value}")
    return value


class AttackConfig(BaseModel):
    """Attack window geometry and parameter ranges (all ranges closed, sampled uniformly)."""

    guard_samples: int = Field(default=30, ge=0, description="Untouched samples at each edge")
    min_duration_samples: int = Field(default=60, ge=1, description="Minimum window length")
    bias_range: Tuple[float, float] = Field(default=(0.003, 0.008))
    drift_range: Tuple[float, float] = Field(default=(0.005, 0.015))
    spike_count_range: Tuple[int, int] = Field(default=(3, 10))
    spike_width_max: int = Field(default=4, ge=1)
    spike_magnitude_range: Tuple[float, float] = Field(default=(0.01, 0.20))
    noise_sigma: float = Field(default=0.002, ge=0, description="Background noise (normalized)")
    placement_retries: int = Field(default=100, ge=1)
    easy: bool = Field(default=False, description="Widen magnitudes for illustration datasets")

    @field_validator("bias_range", "drift_range", "spike_magnitude_range")
    @classmethod
    def validate_ranges(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        """Validate closed non-negative ranges."""
        return _check_range("range", v)

    @field_validator("spike_count_range")
    @classmethod
    def validate_count(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        """Validate spike count range."""
        if v[0] < 1 or v[1] < v[0]:
            raise ValueError(f"spike_count_range must satisfy 1 <= low <= high, got {v}")
        return v

    def effective(self) -> "AttackConfig":
        """Return the configuration actually used for sampling.

        With ``easy`` set, bias and drift magnitudes are scaled by 5 and spike
        magnitudes by 2 (capped at 0.5).
        """
        if not self.easy:
            return self
        spike_low, spike_high = self.spike_magnitude_range
        return self.model_copy(
            update={
                "bias_range": (self.bias_range[0] * 5, self.bias_range[1] * 5),
                "drift_range": (self.drift_range[0] * 5, self.drift_range[1] * 5),
                "spike_magnitude_range": (min(spike_low * 2, 0.5), min(spike_high * 2, 0.5)),
                "easy": False,
            }
        )


class DatasetConfig(BaseModel):
    """Corpus size, split ratios and generation parallelism."""

    corpus_size: int = Field(default=1200, ge=1, description="Number of snippet ids")
    ratios: Tuple[float, float, float] = Field(default=(0.70, 0.15, 0.15))
    split_seed: int = Field(default=42, ge=0)
    workers: int = Field(default=1, ge=1, description="Processes used for corpus generation")

    @field_validator("ratios")
    @classmethod
    def validate_ratios(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        """Ratios must be non-negative and sum to one."""
        if any(r < 0 for r in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"Split ratios must be >= 0 and sum to 1, got {v}")
        return v


class ModelConfig(BaseModel):
    """1D residual network architecture."""

    width_scale: float = Field(default=0.5, gt=0, description="Multiplier on channel widths")
    stem_channels: int = Field(default=32, gt=0)
    stem_kernel: int = Field(default=7, gt=0)
    stem_stride: int = Field(default=2, gt=0)
    block_channels: List[int] = Field(default_factory=lambda: [32, 32, 64, 64, 128, 128, 256, 256])
    input_length: int = Field(default=300, gt=0)
    num_classes: int = Field(default=2, ge=2)
    bn_eps: float = Field(default=1e-5, gt=0)
    bn_momentum: float = Field(default=0.1, gt=0, le=1)
    lora_alpha: Optional[float] = Field(
        default=None, gt=0, description="LoRA alpha; None means alpha = r (scaling 1)"
    )

    @field_validator("stem_kernel")
    @classmethod
    def validate_kernel(cls, v: int) -> int:
        """Same-padding requires an odd kernel."""
        if v % 2 == 0:
            raise ValueError(f"stem_kernel must be odd, got {v}")
        return v

    @field_validator("block_channels")
    @classmethod
    def validate_blocks(cls, v: List[int]) -> List[int]:
        """At least one block with positive width."""
        if not v or any(c <= 0 for c in v):
            raise ValueError("block_channels must be a non-empty list of positive widths")
        return v


class TrainingConfig(BaseModel):
    """Optimizer and epoch budget."""

    batch_size: int = Field(default=64, gt=0)
    lr: float = Field(default=3e-4, gt=0, description="Peak learning rate of the cosine schedule")
    weight_decay: float = Field(default=1e-2, ge=0)
    betas: Tuple[float, float] = Field(default=(0.9, 0.999))
    eps: float = Field(default=1e-8, gt=0)
    e_warm: int = Field(default=3, ge=1)
    e_ft: int = Field(default=7, ge=1)
    e_full: int = Field(default=10, ge=1)
    enforce_epoch_parity: bool = Field(
        default=True, description="Require e_warm + e_ft == e_full for matched comparisons"
    )

    @model_validator(mode="after")
    def validate_parity(self) -> "TrainingConfig":
        """Keep the warm + fine-tune budget equal to the full fine-tune budget."""
        if self.enforce_epoch_parity and self.e_warm + self.e_ft != self.e_full:
            raise ValueError(
                f"e_warm + e_ft must equal e_full ({self.e_warm} + {self.e_ft} != "
                f"{self.e_full}); set enforce_epoch_parity: false to override"
            )
        return self


class CdwfConfig(BaseModel):
    """Budgeted configuration search."""

    budgets: List[float] = Field(default_factory=lambda: [0.02, 0.05, 0.10])
    rank_set: List[int] = Field(default_factory=lambda: [1, 2, 4, 8, 16])
    eps_gain: float = Field(default=0.001, ge=0, description="Near-best predicted accuracy slack")
    n_importance_batches: int = Field(default=50, ge=1)
    forced_rank: Optional[int] = Field(default=None, ge=1)
    warm_sweep: List[int] = Field(default_factory=lambda: [1, 2, 3, 4])

    @field_validator("budgets")
    @classmethod
    def validate_budgets(cls, v: List[float]) -> List[float]:
        """Budgets are fractions in (0, 1]."""
        if not v:
            raise ValueError("At least one budget is required")
        for budget in v:
            if not 0 < budget <= 1:
                raise ValueError(f"Budget must be in (0, 1], got {budget}")
        return v

    @field_validator("rank_set")
    @classmethod
    def validate_ranks(cls, v: List[int]) -> List[int]:
        """Ranks are positive and de-duplicated in ascending order."""
        if not v or any(r < 1 for r in v):
            raise ValueError("rank_set must contain positive ranks")
        return sorted(set(v))


class LoggingConfig(BaseModel):
    """Logging configuration."""

    level: str = Field(default="INFO", description="Log level (DEBUG, INFO, WARNING, ERROR)")
    file: str = Field(default="", description="Log file path (empty for console only)")
    max_bytes: int = Field(default=10485760, gt=0, description="Max log file size in bytes")
    backup_count: int = Field(default=3, ge=0, description="Number of backup log files to keep")

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate log level is valid."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        upper = v.upper()
        if upper not in valid_levels:
            raise ValueError(f"Invalid log level: {v}. Must be one of {valid_levels}")
        return upper


class ReportConfig(BaseModel):
    """Report emission options."""

    include_wall_time: bool = Field(
        default=False, description="Add the (non-deterministic) wall time column to reports"
    )


class RunConfig(BaseModel):
    """Complete run configuration.

    This model validates the entire config file structure and provides
    sensible defaults for all optional fields.
    """

    seed: int = Field(default=42, ge=0)
    attack_kind: AttackKind = Field(default=AttackKind.SPIKE, description="Target task")
    output_dir: str = Field(default="runs")
    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)
    attacks: AttackConfig = Field(default_factory=AttackConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    cdwf: CdwfConfig = Field(default_factory=CdwfConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    report: ReportConfig = Field(default_factory=ReportConfig)

    @model_validator(mode="after")
    def validate_geometry(self) -> "RunConfig":
        """The attack window must fit between the guards."""
        length = self.simulator.sample_rate_hz * self.simulator.duration_s
        span = length - 2 * self.attacks.guard_samples
        if self.attacks.min_duration_samples > span:
            raise ValueError(
                f"min_duration_samples ({self.attacks.min_duration_samples}) exceeds the "
                f"interior span ({span})"
            )
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary."""
        return self.model_dump(mode="json")
