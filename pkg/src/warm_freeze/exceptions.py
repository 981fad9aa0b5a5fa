"""Custom exception hierarchy for the warm-freeze toolkit.

This module provides a structured exception hierarchy that enables more
specific error handling throughout the codebase. Only the CLI entry point
maps these to process exit codes.
"""

from __future__ import annotations

from typing import Optional


class WarmFreezeError(Exception):
    """Base exception for all warm-freeze errors.

    All custom exceptions in this project should inherit from this class.
    This allows catching all project-specific errors with a single except clause.
    """


class ConfigError(WarmFreezeError):
    """Configuration-related errors.

    Raised when there are issues with configuration files, validation,
    or command-line overrides.
    """


class SimulationError(WarmFreezeError):
    """PV simulator errors."""


class ConvergenceError(SimulationError):
    """The implicit single-diode current solve did not converge."""

    def __init__(self, message: str, irradiance: float, temperature: float) -> None:
        """Initialize convergence error.

        Args:
            message: Error description
            irradiance: Irradiance (W/m²) at which the solve failed
            temperature: Cell temperature (°C) at which the solve failed
        """
        self.irradiance = irradiance
        self.temperature = temperature
        super().__init__(f"{message} (g={irradiance:.3f} W/m², t={temperature:.3f} °C)")


class AttackError(WarmFreezeError):
    """Attack injection errors."""


class AttackGeometryError(AttackError):
    """The attack window or spike events cannot be placed inside the snippet."""


class DatasetError(WarmFreezeError):
    """Dataset assembly or storage errors."""


class DatasetFormatError(DatasetError):
    """Dataset file is malformed or truncated."""


class MagicMismatchError(DatasetFormatError):
    """Dataset or checkpoint file does not start with the expected magic bytes."""


class VersionMismatchError(DatasetFormatError):
    """Dataset file was written with an unsupported format version."""

    def __init__(self, message: str, found: int, expected: int) -> None:
        self.found = found
        self.expected = expected
        super().__init__(message)


class SplitError(DatasetError):
    """Split assignment cannot be computed (empty ids, duplicates, bad ratios)."""


class NormalizationError(DatasetError):
    """Normalization statistics are degenerate."""


class ModelError(WarmFreezeError):
    """Neural network engine errors."""


class ShapeMismatchError(ModelError):
    """Tensor shapes do not agree with the layer configuration."""


class NonFiniteError(ModelError):
    """A NaN or infinity appeared in a forward or backward pass."""


class BackwardWithoutForwardError(ModelError):
    """backward() was called without a cached forward pass."""


class LoraAttachmentError(ModelError):
    """LoRA adapters cannot be attached (double attachment, bad rank or index)."""


class CheckpointError(ModelError):
    """Checkpoint file is malformed or inconsistent with the architecture."""


class CdwfError(WarmFreezeError):
    """Errors raised by the warm-freeze selection pipeline."""


class ImportanceError(CdwfError):
    """Block importance is degenerate (all gradient norms are zero)."""


class ConfigurationConflictError(CdwfError):
    """Kept and frozen block sets overlap or do not cover the network."""


class InfeasibleBudgetError(CdwfError):
    """No candidate configuration fits inside the trainable-parameter budget."""

    def __init__(self, f_max: float, smallest_fraction: Optional[float] = None) -> None:
        """Initialize infeasible budget error.

        Args:
            f_max: Budget that could not be met
            smallest_fraction: Smallest trainable fraction over all candidates
        """
        self.f_max = f_max
        self.smallest_fraction = smallest_fraction
        message = f"No configuration fits budget f_max={f_max:g}"
        if smallest_fraction is not None:
            message += f"; smallest feasible fraction is {smallest_fraction:.6f}"
        super().__init__(message)


class MetricError(WarmFreezeError):
    """Metric inputs are invalid (empty, single-class, zero reference)."""


class ArtifactError(WarmFreezeError):
    """A run artifact (dataset, checkpoint, plan, report row) is missing or unreadable."""

    def __init__(self, message: str, path: Optional[str] = None) -> None:
        self.path = path
        super().__init__(message)
