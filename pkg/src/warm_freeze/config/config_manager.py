"""Configuration manager for loading and validating run configuration files.

Config files may be YAML or JSON (JSON is parsed by the same YAML 1.2 loader).
Command-line flags are applied on top as dot-notation overrides before the
merged document is validated through :class:`RunConfig`.
"""

import copy
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, TypeVar, Union

import yaml
from pydantic import ValidationError
from ruamel.yaml import YAML, YAMLError as RuamelYAMLError
from ruamel.yaml.comments import CommentedMap

from warm_freeze.config.models import RunConfig
from warm_freeze.exceptions import ConfigError

T = TypeVar("T")


logger = logging.getLogger(__name__)


__all__ = ["ConfigError", "ConfigManager"]


def _plain(value: Any) -> Any:
    """Convert ruamel containers into plain dicts/lists."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


class ConfigManager:
    """Manages loading, overriding and validating the run configuration."""

    def __init__(
        self,
        user_config_path: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Initialize the configuration manager.

        Args:
            user_config_path: Path to a YAML/JSON config file; None uses defaults only
            overrides: Dot-notation overrides applied after loading (e.g. CLI flags)

        Raises:
            ConfigError: If the config file doesn't exist or the result is invalid
        """
        self._config: Dict[str, Any] = {}
        self._user_config_path = user_config_path
        self._ruamel = YAML()
        self._ruamel.preserve_quotes = True
        self._run_config: Optional[RunConfig] = None
        self._load_config()
        if overrides:
            self.update_config(overrides)

    def _load_yaml_file(self, path: Path) -> Dict[str, Any]:
        """Load a YAML or JSON file and return its contents.

        Args:
            path: Path to config file

        Returns:
            Dictionary containing the file contents

        Raises:
            ConfigError: If file cannot be read or parsed
        """
        try:
            with open(path, "r", encoding="utf-8") as f:
                content = self._ruamel.load(f)
                if content is None:
                    content = CommentedMap()
                if not isinstance(content, dict):
                    raise ConfigError(f"Config file {path} must contain a mapping at top level")
                return _plain(content)
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {path}") from e
        except (yaml.YAMLError, RuamelYAMLError) as e:
            raise ConfigError(f"Failed to parse config file {path}: {e}") from e
        except OSError as e:
            raise ConfigError(f"Failed to load config file {path}: {e}") from e

    @staticmethod
    def validate_config_dict(config: Dict[str, Any]) -> RunConfig:
        """Validate a configuration dictionary.

        Returns:
            The validated RunConfig

        Raises:
            ConfigError: If configuration is invalid
        """
        try:
            return RunConfig.model_validate(config)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e

    def _validate_config(self) -> None:
        """Validate the loaded configuration."""
        self._run_config = self.validate_config_dict(self._config)

    def _load_config(self) -> None:
        """Load configuration from the user config file, if any.

        Raises:
            ConfigError: If config file doesn't exist or is invalid
        """
        if self._user_config_path is None:
            logger.debug("No config file given, using defaults")
            self._config = {}
        else:
            config_path = Path(self._user_config_path)
            if not config_path.exists():
                raise ConfigError(f"Configuration file not found: {config_path}")
            logger.info("Loading configuration from: %s", config_path)
            self._config = self._load_yaml_file(config_path)

        self._validate_config()
        logger.debug("Configuration loaded and validated successfully")

    @property
    def run_config(self) -> RunConfig:
        """The validated run configuration."""
        assert self._run_config is not None
        return self._run_config

    def get(self, key: str, default: Optional[T] = None) -> Union[Any, T]:
        """Get a resolved configuration value by key.

        Supports dot notation for nested values (e.g., 'training.lr'). Values
        come from the validated config, so defaults are filled in.

        Args:
            key: Configuration key (supports dot notation)
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        value: Any = self.run_config.to_dict()
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def update_config(self, updates: Dict[str, Any]) -> None:
        """Apply dot-notation updates and re-validate.

        None values are skipped so unset CLI flags leave the file value in place.

        Args:
            updates: Dictionary of config updates (dot notation keys)

        Raises:
            ConfigError: If updates would make config invalid
        """
        candidate = copy.deepcopy(self._config)
        for key, value in updates.items():
            if value is None:
                continue
            keys = key.split(".")
            d: Any = candidate
            for k in keys[:-1]:
                d = d.setdefault(k, {})
                if not isinstance(d, dict):
                    raise ConfigError(f"Cannot override '{key}': '{k}' is not a section")
            d[keys[-1]] = value
            logger.debug("Config override %s=%r", key, value)

        self._run_config = self.validate_config_dict(candidate)
        self._config = candidate

    def to_dict(self) -> Dict[str, Any]:
        """Get the resolved configuration as a dictionary."""
        return self.run_config.to_dict()

    def save_config(self, output_path: str) -> None:
        """Save the resolved configuration to a YAML file (atomic write).

        Args:
            output_path: Path to save configuration file

        Raises:
            ConfigError: If save fails
        """
        tmp_path = None
        try:
            Path(output_path).parent.mkdir(parents=True, exist_ok=True)
            with tempfile.NamedTemporaryFile(
                mode="w",
                delete=False,
                suffix=".yml",
                encoding="utf-8",
                dir=str(Path(output_path).parent),
            ) as tmp:
                self._ruamel.dump(self.to_dict(), tmp)
                tmp_path = tmp.name

            shutil.move(tmp_path, output_path)
            logger.info("Resolved configuration saved to %s", output_path)

        except Exception as e:
            if tmp_path and os.path.exists(tmp_path):
                os.unlink(tmp_path)
            raise ConfigError(f"Failed to save config: {e}") from e
