"""Configuration loading for monocluster runs."""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import jsonschema
from pydantic import ValidationError

from ..core.bounds_suite import BoundConstants
from ..core.errors import ConfigError
from ..core.logging_config import get_logger
from .run_config import RunConfig

CONFIG_DIR = Path(__file__).parent
DEFAULT_CONFIG = CONFIG_DIR / "default_run.json"
SCHEMA_FILE = CONFIG_DIR / "run_config_schema.json"
FROZEN_CONSTANTS = CONFIG_DIR / "bound_constants.json"
ROOT_CONFIG_NAME = "run_config.json"

# run config fields that fix the graph family the constants were calibrated on
FAMILY_FIELDS = ("dim", "side", "copies", "origin", "polynomial", "sources", "p_max", "kernel")


class ConfigLoader:
    """Loads run configurations: JSON, then JSON Schema, then the pydantic model."""

    def __init__(self, schema_path: Optional[Path] = None):
        self.logger = get_logger("ConfigLoader")
        self.schema_path = Path(schema_path) if schema_path else SCHEMA_FILE
        self._schema: Optional[Dict[str, Any]] = None

    @property
    def schema(self) -> Dict[str, Any]:
        if self._schema is None:
            with open(self.schema_path, "r", encoding="utf-8") as f:
                self._schema = json.load(f)
        return self._schema

    def load_run_config(self, file_path: Union[str, Path]) -> RunConfig:
        """Load and validate a run configuration file.

        Args:
            file_path: Path to the JSON configuration

        Returns:
            Validated RunConfig

        Raises:
            FileNotFoundError: If the file doesn't exist
            ConfigError: If the JSON, the schema or a field check fails
        """
        self.logger.info("loading run config", path=str(file_path))
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise FileNotFoundError(f"Run config file not found: {file_path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in run config file: {e}")
        return self.parse(data)

    def parse(self, data: Dict[str, Any]) -> RunConfig:
        """Validate raw configuration data."""
        try:
            jsonschema.validate(instance=data, schema=self.schema)
        except jsonschema.ValidationError as e:
            location = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"Run config violates schema at {location}: {e.message}")
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid run config: {e}")

    def apply_overrides(self, config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
        """Merge flag values over the file values; ``None`` means not given.

        Raises:
            ConfigError: If the merged configuration is invalid
        """
        given = {k: v for k, v in overrides.items() if v is not None}
        if not given:
            return config
        self.logger.debug("applying overrides", keys=sorted(given))
        merged = config.model_dump()
        merged.update(given)
        try:
            return RunConfig.model_validate(merged)
        except ValidationError as e:
            raise ConfigError(f"Invalid run config after overrides: {e}")

    def discover(self, root: Optional[Union[str, Path]] = None) -> Path:
        """run_config.json under ``root`` (default: cwd) if present, else the bundled default."""
        base = Path(root) if root is not None else Path.cwd()
        candidate = base / ROOT_CONFIG_NAME
        if candidate.exists():
            return candidate
        return DEFAULT_CONFIG

    def load_default(self, root: Optional[Union[str, Path]] = None) -> RunConfig:
        return self.load_run_config(self.discover(root))

    def load_constants(self, file_path: Optional[Union[str, Path]] = None) -> BoundConstants:
        """Load frozen bound constants (default: the bundled file).

        Raises:
            FileNotFoundError: If the file doesn't exist
            ConfigError: If the JSON or the constants block is invalid
        """
        path = Path(file_path) if file_path else FROZEN_CONSTANTS
        self.logger.info("loading bound constants", path=str(path))
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise FileNotFoundError(f"Bound constants file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in bound constants file: {e}")
        try:
            constants = BoundConstants.from_dict(data["constants"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid bound constants file {path}: {e}")
        self.logger.debug("frozen constants family", family=data.get("family"))
        return constants

    def save_constants(
        self, constants: BoundConstants, file_path: Union[str, Path], config: RunConfig
    ) -> Path:
        """Write constants with the run fields that fix their graph family."""
        path = Path(file_path)
        dumped = config.model_dump()
        family = {k: dumped[k] for k in FAMILY_FIELDS}
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"family": family, "constants": constants.to_dict()}, f, indent=2, sort_keys=True)
            f.write("\n")
        self.logger.info("saved bound constants", path=str(path), k7=constants.k7, k10=constants.k10)
        return path
