"""Utility functions for relaxfree."""

import logging
import sys
from pathlib import Path
from typing import List, Optional

CONSOLE_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(verbose: bool = False, log_file: Optional[Path] = None) -> logging.Logger:
    """Configure the ``relaxfree`` logger.

    numpy overflow and invalid-value warnings from unstable runs are routed
    through the same handlers, so they land in the run log next to the step
    that caused them.

    Args:
        verbose: DEBUG (per-step diagnostics) instead of INFO.
        log_file: Also write everything at DEBUG to this file.

    Returns:
        The package logger.
    """
    level = logging.DEBUG if verbose else logging.INFO
    logger = logging.getLogger("relaxfree")
    logger.setLevel(level)
    logger.handlers.clear()

    handlers: List[logging.Handler] = []
    console = logging.StreamHandler(sys.stdout)
    console.setLevel(level)
    console.setFormatter(logging.Formatter(CONSOLE_FORMAT, datefmt="%H:%M:%S"))
    handlers.append(console)

    if log_file:
        ensure_directory(Path(log_file).parent)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        handlers.append(file_handler)

    for handler in handlers:
        logger.addHandler(handler)

    logging.captureWarnings(True)
    warnings_logger = logging.getLogger("py.warnings")
    warnings_logger.handlers = list(handlers)
    warnings_logger.propagate = False

    return logger


def ensure_directory(path: Path) -> Path:
    """Create an output directory (and parents) if missing.

    Raises:
        NotADirectoryError: If the path exists as a file.
        PermissionError: If the directory cannot be created.
    """
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise NotADirectoryError(f"Output path '{path}' is a file, not a directory")
    try:
        path.mkdir(parents=True, exist_ok=True)
    except PermissionError:
        raise PermissionError(f"Cannot create output directory '{path}': Permission denied")
    return path


def format_duration(seconds: float) -> str:
    """Format a wall-clock duration for run summaries.

    Returns:
        "420ms" below one second, otherwise e.g. "5m 30s" or "1h 23m 45s".
    """
    if seconds < 1.0:
        return f"{int(round(seconds * 1000))}ms"

    hours, remainder = divmod(int(seconds), 3600)
    minutes, secs = divmod(remainder, 60)
    parts = [f"{value}{unit}" for value, unit in ((hours, "h"), (minutes, "m")) if value]
    if secs or not parts:
        parts.append(f"{secs}s")
    return " ".join(parts)
