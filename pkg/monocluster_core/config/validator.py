"""Cross-field validation of run configurations."""

from typing import Optional

from ..core.errors import ConfigError
from ..core.gaussian_engine import MAX_QUADRATURE_DIMENSION
from ..core.logging_config import get_logger
from ..core.mayer_lattice import cell_of_point
from .run_config import MAX_ORDER, RunConfig

SERIES_COMMANDS = ("verify-identity", "schwinger")


class Validator:
    """Checks that a run configuration fits the requested command."""

    def __init__(self):
        self.logger = get_logger("Validator")

    def validate_run(self, config: RunConfig, command: str, group: Optional[str] = None) -> bool:
        """Validate a configuration for one CLI command.

        Raises:
            ConfigError: If the configuration cannot serve the command
        """
        if config.order > MAX_ORDER:
            raise ConfigError(f"order {config.order} exceeds {MAX_ORDER}")

        window = config.window()
        for point in config.sources:
            if not window.contains_cell(cell_of_point(point)):
                raise ConfigError(f"Source {point} lies outside the window")

        if command in SERIES_COMMANDS:
            if config.p_max < config.order:
                raise ConfigError(
                    f"p_max ({config.p_max}) must be at least the order ({config.order})"
                )
            if not config.sources:
                self.logger.warning("no sources given; computing the vacuum series")

        if command == "bounds" and group in ("parasite", "all"):
            variables = config.nodes_per_cell * window.volume
            if variables > MAX_QUADRATURE_DIMENSION:
                raise ConfigError(
                    f"Partition functions need at most {MAX_QUADRATURE_DIMENSION} node "
                    f"variables, the window has {variables}"
                )

        self.logger.debug("validated run config", command=command)
        return True
