"""
Logging configuration for codedmrpt.

Every entry point (CLI subcommands, the experiment runner) configures the
package logger once through `configure_logging()`; library modules only ask for
child loggers via `logging.getLogger(__name__)` and never attach handlers.
"""

from __future__ import annotations

import logging
from pathlib import Path

from codedmrpt.errors import ConfigError

LOGGER_NAME = "codedmrpt"
LOG_FILENAME = "codedmrpt.log"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def _parse_level(level: str | int) -> int:
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    # getLevelName returns "Level X" for names it does not know.
    if not isinstance(value, int):
        raise ConfigError(f"unknown log level: {level!r}")
    return value


def configure_logging(log_dir: Path, level: str | int = "INFO") -> logging.Logger:
    numeric = _parse_level(level)
    log_dir.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(numeric)
    # Keep records away from the root logger so nothing is printed twice.
    logger.propagate = False

    if logger.handlers:
        # Repeated CLI invocations in one process (tests) only move the level.
        for handler in logger.handlers:
            handler.setLevel(numeric)
        return logger

    fmt = logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    for handler in (logging.StreamHandler(), logging.FileHandler(log_dir / LOG_FILENAME, encoding="utf-8")):
        handler.setFormatter(fmt)
        handler.setLevel(numeric)
        logger.addHandler(handler)
    return logger
