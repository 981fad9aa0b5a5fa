"""Configuration management for warm-freeze runs."""

from .config_manager import ConfigManager
from .models import (
    AttackConfig,
    AttackKind,
    CdwfConfig,
    DatasetConfig,
    DiodeParamsConfig,
    ModelConfig,
    RunConfig,
    SimulatorConfig,
    TrainingConfig,
)

__all__ = [
    "AttackConfig",
    "AttackKind",
    "CdwfConfig",
    "ConfigManager",
    "DatasetConfig",
    "DiodeParamsConfig",
    "ModelConfig",
    "RunConfig",
    "SimulatorConfig",
    "TrainingConfig",
]
