"""Tests for configuration manager."""

import json
import tempfile
from pathlib import Path
from typing import Any, Dict

import pytest
import yaml

from warm_freeze.config import ConfigManager
from warm_freeze.config.config_manager import ConfigError
from warm_freeze.config.models import AttackConfig, AttackKind, RunConfig


def get_minimal_valid_config() -> Dict[str, Any]:
    """Get a minimal valid configuration for testing."""
    return {
        "seed": 7,
        "attack_kind": "drift",
        "output_dir": "runs/test",
        "dataset": {"corpus_size": 100, "split_seed": 42},
        "model": {"width_scale": 0.25},
        "training": {"batch_size": 32, "e_warm": 2, "e_ft": 3, "e_full": 5},
        "cdwf": {"budgets": [0.05, 0.1], "rank_set": [4, 1, 2]},
        "logging": {"level": "INFO", "file": "", "max_bytes": 10485760, "backup_count": 3},
    }


def create_temp_config(config_dict: Dict[str, Any], suffix: str = ".yaml") -> str:
    """Create a temporary config file and return its path."""
    with tempfile.NamedTemporaryFile(mode="w", suffix=suffix, delete=False) as f:
        if suffix == ".json":
            json.dump(config_dict, f)
        else:
            yaml.dump(config_dict, f)
        return f.name


def test_missing_config_file_raises_error() -> None:
    """Test that missing config file raises ConfigError."""
    with pytest.raises(ConfigError, match="Configuration file not found"):
        ConfigManager(user_config_path="nonexistent.yaml")


def test_defaults_without_file() -> None:
    """Test that no config file yields the documented defaults."""
    config = ConfigManager().run_config
    assert config.seed == 42
    assert config.attack_kind == AttackKind.SPIKE
    assert config.dataset.corpus_size == 1200
    assert config.cdwf.budgets == [0.02, 0.05, 0.10]
    assert config.training.e_warm + config.training.e_ft == config.training.e_full


def test_load_valid_config() -> None:
    """Test that valid config can be loaded."""
    config_path = create_temp_config(get_minimal_valid_config())

    try:
        config = ConfigManager(user_config_path=config_path)

        assert config.get("training") is not None
        assert config.get("cdwf") is not None
        assert config.run_config.attack_kind == AttackKind.DRIFT
        # rank set is normalized to ascending order
        assert config.get("cdwf.rank_set") == [1, 2, 4]
    finally:
        Path(config_path).unlink()


def test_load_json_config() -> None:
    """Test that a JSON config file is accepted."""
    config_path = create_temp_config(get_minimal_valid_config(), suffix=".json")

    try:
        config = ConfigManager(user_config_path=config_path)
        assert config.get("seed") == 7
    finally:
        Path(config_path).unlink()


def test_get_with_dot_notation() -> None:
    """Test getting nested config values with dot notation."""
    config_path = create_temp_config(get_minimal_valid_config())

    try:
        config = ConfigManager(user_config_path=config_path)

        assert config.get("training.batch_size") == 32
        assert config.get("model.width_scale") == 0.25
        # unset values come back filled in from defaults
        assert config.get("training.lr") == 3e-4
    finally:
        Path(config_path).unlink()


def test_get_with_default() -> None:
    """Test that get() returns default when key not found."""
    config_path = create_temp_config(get_minimal_valid_config())

    try:
        config = ConfigManager(user_config_path=config_path)

        assert config.get("nonexistent.key", "default") == "default"
        assert config.get("training.nonexistent", 999) == 999
    finally:
        Path(config_path).unlink()


def test_invalid_yaml_raises_error() -> None:
    """Test that invalid YAML raises ConfigError."""
    with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
        f.write("invalid: yaml: content: [[[")
        invalid_path = f.name

    try:
        with pytest.raises(ConfigError, match="Failed to parse config file"):
            ConfigManager(user_config_path=invalid_path)
    finally:
        Path(invalid_path).unlink()


def test_epoch_parity_violation_raises_error() -> None:
    """Test that e_warm + e_ft must equal e_full unless parity is switched off."""
    config_dict = get_minimal_valid_config()
    config_dict["training"]["e_ft"] = 4

    config_path = create_temp_config(config_dict)
    try:
        with pytest.raises(ConfigError, match="e_warm \\+ e_ft must equal e_full"):
            ConfigManager(user_config_path=config_path)
    finally:
        Path(config_path).unlink()

    config_dict["training"]["enforce_epoch_parity"] = False
    config_path = create_temp_config(config_dict)
    try:
        assert ConfigManager(user_config_path=config_path).get("training.e_ft") == 4
    finally:
        Path(config_path).unlink()


@pytest.mark.parametrize(
    "section,values",
    [
        ("simulator", {"sample_rate_hz": 20}),
        ("model", {"stem_kernel": 4}),
        ("cdwf", {"budgets": [0.0]}),
        ("cdwf", {"rank_set": [0, 2]}),
        ("attacks", {"bias_range": [0.01, 0.005]}),
        ("attacks", {"min_duration_samples": 241}),
        ("logging", {"level": "VERBOSE"}),
    ],
)
def test_invalid_values_raise_error(section: str, values: Dict[str, Any]) -> None:
    """Test that out-of-range values raise ConfigError."""
    config_dict = get_minimal_valid_config()
    config_dict.setdefault(section, {}).update(values)

    config_path = create_temp_config(config_dict)
    try:
        with pytest.raises(ConfigError, match="Invalid configuration"):
            ConfigManager(user_config_path=config_path)
    finally:
        Path(config_path).unlink()


def test_overrides_applied_and_none_skipped() -> None:
    """Test that dot-notation overrides win over the file and None leaves values alone."""
    config_path = create_temp_config(get_minimal_valid_config())

    try:
        config = ConfigManager(
            user_config_path=config_path,
            overrides={"seed": 9, "cdwf.budgets": [0.2], "attack_kind": None},
        )
        assert config.get("seed") == 9
        assert config.get("cdwf.budgets") == [0.2]
        assert config.get("attack_kind") == "drift"
    finally:
        Path(config_path).unlink()


def test_invalid_update_keeps_previous_config() -> None:
    """Test that a rejected update leaves the last valid configuration in place."""
    config = ConfigManager()

    with pytest.raises(ConfigError):
        config.update_config({"training.batch_size": 0})

    assert config.get("training.batch_size") == 64


def test_override_into_scalar_rejected() -> None:
    """Test that an override cannot descend into a scalar value."""
    config = ConfigManager(overrides={"seed": 3})

    with pytest.raises(ConfigError, match="is not a section"):
        config.update_config({"seed.value": 1})


def test_save_config_round_trip() -> None:
    """Test that a saved resolved config loads back to the same values."""
    with tempfile.TemporaryDirectory() as tmpdir:
        output_path = Path(tmpdir) / "nested" / "resolved.yml"
        config = ConfigManager(overrides={"seed": 11, "attack_kind": "bias"})
        config.save_config(str(output_path))

        reloaded = ConfigManager(user_config_path=str(output_path))
        assert reloaded.to_dict() == config.to_dict()
        assert reloaded.run_config == config.run_config


def test_easy_mode_scales_ranges() -> None:
    """Test that easy mode multiplies bias and drift ranges by five and spikes by two."""
    effective = AttackConfig(easy=True).effective()
    assert effective.bias_range == pytest.approx((0.015, 0.04))
    assert effective.drift_range == pytest.approx((0.025, 0.075))
    assert effective.spike_magnitude_range == pytest.approx((0.02, 0.40))
    assert not effective.easy


def test_run_config_to_dict_is_json_compatible() -> None:
    """Test that the resolved config serializes to plain JSON types."""
    data = RunConfig().to_dict()
    assert json.loads(json.dumps(data)) == data
    assert data["attack_kind"] == "spike"
