"""Console and file logging for the marginbv package logger."""

import logging
import sys
from datetime import datetime
from pathlib import Path

LEVEL_COLORS = {
    logging.DEBUG: "\033[36m",
    logging.INFO: "\033[32m",
    logging.WARNING: "\033[33m",
    logging.ERROR: "\033[31m",
    logging.CRITICAL: "\033[35m",
}
RESET = "\033[0m"

CONSOLE_FORMAT = "%(asctime)s %(levelname)-8s %(component)-22s %(message)s"
FILE_FORMAT = "%(asctime)s.%(msecs)03d %(levelname)-8s %(name)s:%(lineno)d %(message)s"


class ColoredFormatter(logging.Formatter):
    """Colors the level name and shortens ``marginbv.x.y`` to ``x.y``."""

    def format(self, record):
        # copy: other handlers must see the plain record
        record = logging.makeLogRecord(record.__dict__)
        color = LEVEL_COLORS.get(record.levelno)
        if color and sys.stderr.isatty():
            record.levelname = f"{color}{record.levelname}{RESET}"
        record.component = record.name.removeprefix("marginbv.")
        return super().format(record)


def setup_logging(
    log_level: str = "INFO",
    log_to_file: bool = False,
    log_dir: str = "logs",
    console_output: bool = True,
) -> logging.Logger:
    """
    Configure the ``marginbv`` logger and return it.

    Console messages go to stderr at ``log_level``; with ``log_to_file`` a
    timestamped file under ``log_dir`` also receives every DEBUG record.
    Calling it again replaces the previous handlers.
    """
    level = logging.getLevelName(log_level.upper())
    if not isinstance(level, int):
        raise ValueError(f"unknown log level '{log_level}'")

    root = logging.getLogger("marginbv")
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.propagate = False
    root.setLevel(logging.DEBUG if log_to_file else level)

    if console_output:
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(level)
        console.setFormatter(ColoredFormatter(CONSOLE_FORMAT, datefmt="%H:%M:%S"))
        root.addHandler(console)

    if log_to_file:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"marginbv_{datetime.now():%Y%m%d_%H%M%S}.log"
        file_handler = logging.FileHandler(path, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        root.addHandler(file_handler)
        root.debug(f"log file {path}")

    return root


def get_logger(component: str) -> logging.Logger:
    """Logger named ``marginbv.<component>``, e.g. ``get_logger("nodes.bootstrap")``."""
    return logging.getLogger(f"marginbv.{component}")


def log_step_start(logger: logging.Logger, step_name: str, detail: str = ""):
    logger.info(f"▶ {step_name}" + (f" ({detail})" if detail else ""))


def log_step_end(logger: logging.Logger, step_name: str, duration: float):
    logger.info(f"✓ {step_name} done in {duration:.3f}s")


def log_step_skipped(logger: logging.Logger, step_name: str, reason: str):
    """Steps that do not apply to the loss or data are logged at WARNING."""
    logger.warning(f"- {step_name} skipped: {reason}")


def log_error(logger: logging.Logger, step_name: str, error: Exception):
    logger.error(f"✗ {step_name} failed: {error}", exc_info=True)
