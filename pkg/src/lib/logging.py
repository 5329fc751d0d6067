"""Structured logging setup (structlog, rendered to stderr)."""

import logging
import sys
from typing import Optional

import structlog

from .config import LOG_FORMAT, LOG_LEVEL

_configured = False


def _stderr_logger(*args):
    # Looked up per call; sys.stderr may be swapped after configuration
    return structlog.PrintLogger(file=sys.stderr)


def configure_logging(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    """
    Configure structlog for the process.

    Args:
        level: Log level name (default: DRRM_LOG_LEVEL or INFO)
        fmt: "console" or "json" (default: DRRM_LOG_FORMAT or console)
    """
    global _configured

    level_name = (level or LOG_LEVEL).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)
    renderer = (
        structlog.processors.JSONRenderer(sort_keys=True)
        if (fmt or LOG_FORMAT) == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=_stderr_logger,
        cache_logger_on_first_use=False,
    )
    _configured = True


def get_logger(name: str):
    """
    Get a structlog logger bound to a module name.

    Args:
        name: Module name (usually ``__name__``)

    Returns:
        Lazy structlog logger that follows the current configuration
    """
    if not _configured:
        configure_logging()
    return structlog.get_logger(name, module=name)
