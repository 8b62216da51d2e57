"""Logging and numeric helpers."""

from .logging_config import get_logger, setup_logging
from .numerics import DEFAULT_GRID, ProbeGrid

__all__ = ["get_logger", "setup_logging", "DEFAULT_GRID", "ProbeGrid"]
