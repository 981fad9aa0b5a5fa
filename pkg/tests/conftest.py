"""Shared pytest fixtures for all tests."""

from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest

from warm_freeze.config.models import ModelConfig, RunConfig
from warm_freeze.nn import ArraySplit, NetworkModel, build_network
from warm_freeze.simulation.diode import DiodeParams


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for synthetic test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def diode_params() -> DiodeParams:
    """Reference module parameters."""
    return DiodeParams(
        i_ph_stc=8.21,
        i_0=9.825e-8,
        n=1.3,
        r_s=0.221,
        r_sh=415.405,
        n_cells=54,
        v_oc_approx=32.9,
    )


@pytest.fixture
def toy_model_config() -> ModelConfig:
    """Two 8-channel blocks on 32-sample inputs, small enough for finite differences."""
    return ModelConfig(
        width_scale=1.0,
        stem_channels=8,
        stem_kernel=3,
        stem_stride=1,
        block_channels=[8, 8],
        input_length=32,
    )


@pytest.fixture
def toy_model(toy_model_config: ModelConfig) -> NetworkModel:
    """Freshly initialised toy network."""
    return build_network(toy_model_config, seed=7)


@pytest.fixture
def toy_split(rng: np.random.Generator) -> ArraySplit:
    """Sixteen random 32-sample inputs with balanced labels."""
    x = rng.standard_normal((16, 1, 32))
    y = np.array([0, 1] * 8, dtype=np.int64)
    return ArraySplit(x, y)


@pytest.fixture
def desk_model() -> NetworkModel:
    """The default eight-block network on 300-sample inputs."""
    return build_network(ModelConfig(), seed=42)


def tiny_run_config_dict(output_dir: Path) -> Dict[str, Any]:
    """A run small enough to go through every verb in seconds."""
    return {
        "seed": 42,
        "attack_kind": "spike",
        "output_dir": str(output_dir),
        "attacks": {"easy": True},
        "dataset": {"corpus_size": 40},
        "model": {"width_scale": 0.125},
        "training": {"batch_size": 16, "lr": 3e-3, "e_warm": 1, "e_ft": 1, "e_full": 2},
        "cdwf": {
            "budgets": [0.05, 0.2],
            "rank_set": [1, 4],
            "n_importance_batches": 2,
            "warm_sweep": [1],
        },
    }


@pytest.fixture
def tiny_run_config(tmp_path: Path) -> RunConfig:
    """Validated tiny run configuration writing under a temporary directory."""
    return RunConfig.model_validate(tiny_run_config_dict(tmp_path / "run"))
