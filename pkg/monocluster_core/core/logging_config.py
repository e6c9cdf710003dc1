"""Logging configuration for the monocluster package."""

import logging
import os
import sys
from typing import Optional

import structlog

_CONFIGURED = False


def configure_logging(level: Optional[str] = None) -> None:
    """Configure structlog on top of the stdlib handler chain.

    Args:
        level: Log level name. Defaults to MONOCLUSTER_LOG_LEVEL or INFO.
    """
    global _CONFIGURED

    level_name = (level or os.getenv("MONOCLUSTER_LOG_LEVEL", "INFO")).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)

    root = logging.getLogger("monocluster")
    root.setLevel(numeric_level)
    root.propagate = False

    # Reports go to stdout, so logs stay on stderr
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
    for handler in root.handlers:
        handler.setLevel(numeric_level)

    if not _CONFIGURED:
        structlog.configure(
            processors=[
                structlog.stdlib.filter_by_level,
                structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S"),
                structlog.stdlib.add_logger_name,
                structlog.stdlib.add_log_level,
                structlog.processors.format_exc_info,
                structlog.dev.ConsoleRenderer(colors=False),
            ],
            logger_factory=structlog.stdlib.LoggerFactory(),
            wrapper_class=structlog.stdlib.BoundLogger,
            cache_logger_on_first_use=False,
        )
        _CONFIGURED = True


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a configured logger instance.

    Args:
        name: Name for the logger (nested under ``monocluster``)

    Returns:
        Bound structlog logger
    """
    if not _CONFIGURED:
        configure_logging()
    return structlog.get_logger(f"monocluster.{name}")
