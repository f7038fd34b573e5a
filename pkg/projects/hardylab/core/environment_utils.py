#!/usr/bin/env python3
"""
Environment utilities: process-level settings read from environment variables.
"""

import os
import logging
from typing import Optional

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_environment() -> str:
    """Get the current environment setting."""
    return os.getenv("ENVIRONMENT", "production").lower()


def is_development() -> bool:
    """Check if the current environment is development."""
    return get_environment() == "development"


def is_production() -> bool:
    """Check if the current environment is production."""
    return get_environment() == "production"


def get_thread_count(override: Optional[int] = None) -> int:
    """Worker count for per-cube parallelism; CLI flag wins over HARDYLAB_THREADS."""
    if override is not None:
        return max(1, int(override))
    raw = os.getenv("HARDYLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"Ignoring non-integer HARDYLAB_THREADS={raw!r}")
        return 1


def get_output_root(override: Optional[str] = None) -> str:
    """Directory receiving run outputs."""
    if override:
        return override
    return os.getenv("HARDYLAB_OUTPUT_DIR", "runs")


def get_log_level() -> str:
    default = "DEBUG" if is_development() else "INFO"
    return os.getenv("HARDYLAB_LOG_LEVEL", default).upper()


def configure_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once for CLI runs."""
    level_name = (level or get_log_level()).upper()
    numeric = getattr(logging, level_name, logging.INFO)
    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.getLogger().setLevel(numeric)


def get_environment_info() -> dict:
    """Get environment information recorded in run manifests."""
    return {
        "environment": get_environment(),
        "is_development": is_development(),
        "is_production": is_production(),
        "threads": get_thread_count(),
        "log_level": get_log_level()
    }
