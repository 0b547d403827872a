"""Logging for sidlab: one package logger, level-coloured console, optional log file.

Records emitted while a :class:`~sidlab.lab.Lab` command runs carry the run
label (``<command>-s<seed>``) so messages of successive runs in a shared log
file can be told apart.
"""

from __future__ import annotations

import contextvars
import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import TextIO

from rich.console import Console

PACKAGE = "sidlab"
CONSOLE_FORMAT = "%(asctime)s | %(levelname)-8s | %(run_prefix)s%(message)s"
DEBUG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s:%(lineno)d | %(run_prefix)s%(message)s"

_current_run: contextvars.ContextVar[str | None] = contextvars.ContextVar("sidlab_run", default=None)


class RunLabelFilter(logging.Filter):
    """Adds ``run`` and ``run_prefix`` attributes from the active run label."""

    def filter(self, record: logging.LogRecord) -> bool:
        run = _current_run.get()
        record.run = run or ""  # type: ignore[attr-defined]
        record.run_prefix = f"[{run}] " if run else ""  # type: ignore[attr-defined]
        return True


@contextmanager
def run_label(label: str) -> Iterator[None]:
    """Tag every record logged inside the block with ``label``."""
    token = _current_run.set(label)
    try:
        yield
    finally:
        _current_run.reset(token)


class RichHandler(logging.Handler):
    """Prints formatted records through a rich Console, styled by level."""

    STYLES = {
        logging.DEBUG: "dim",
        logging.INFO: "blue",
        logging.WARNING: "yellow",
        logging.ERROR: "red bold",
        logging.CRITICAL: "red bold reverse",
    }

    def __init__(self, stream: TextIO | None = None) -> None:
        super().__init__()
        self.console = Console(file=stream or sys.stderr, highlight=False)

    def emit(self, record: logging.LogRecord) -> None:
        try:
            self.console.print(self.format(record), style=self.STYLES.get(record.levelno, ""), markup=False)
        except Exception:
            self.handleError(record)


def _resolve_level(level: int | str, verbose: bool, debug: bool) -> int:
    if debug:
        return logging.DEBUG
    if verbose:
        return logging.INFO
    if isinstance(level, str):
        return getattr(logging, level.upper(), logging.WARNING)
    return level


def configure_logging(
    level: int | str = logging.WARNING,
    log_file: str | Path | None = None,
    format_string: str | None = None,
    verbose: bool = False,
    debug: bool = False,
    rich_console: bool = False,
) -> logging.Logger:
    """Configure the ``sidlab`` logger.

    Quiet by default (WARNING): censored σ levels, unusable fit points and
    failed probes still show. ``verbose`` adds campaign milestones and
    ``debug`` adds per-replica progress with source locations.

    Args:
        level: Base level when neither flag is set (int or name).
        log_file: Also write records to this file (parents are created).
        format_string: Replaces the default console/file format.
        verbose: INFO level.
        debug: DEBUG level and the ``name:lineno`` format.
        rich_console: Colour console records by level.

    Returns:
        The configured package logger.
    """
    resolved = _resolve_level(level, verbose, debug)
    formatter = logging.Formatter(
        format_string or (DEBUG_FORMAT if debug else CONSOLE_FORMAT), datefmt="%H:%M:%S"
    )
    labels = RunLabelFilter()

    logger = logging.getLogger(PACKAGE)
    logger.setLevel(resolved)
    logger.handlers.clear()

    handlers: list[logging.Handler] = [
        RichHandler(stream=sys.stderr) if rich_console else logging.StreamHandler(sys.stderr)
    ]
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(path, encoding="utf-8"))

    for handler in handlers:
        handler.setLevel(resolved)
        handler.setFormatter(formatter)
        handler.addFilter(labels)
        logger.addHandler(handler)

    logger.propagate = False
    return logger


def get_logger(name: str) -> logging.Logger:
    """Logger under the ``sidlab.`` namespace (``"cli"`` becomes ``"sidlab.cli"``)."""
    if name != PACKAGE and not name.startswith(f"{PACKAGE}."):
        name = f"{PACKAGE}.{name}"
    return logging.getLogger(name)
