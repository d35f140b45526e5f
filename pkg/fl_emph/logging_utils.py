"""Package logging: one console handler that prints above tqdm progress bars."""
import copy
import logging
from typing import Optional, Sequence

import tqdm

PACKAGE = "fl_emph"

LEVEL_STYLES = {
    logging.CRITICAL: ("\x1b[31m", "FATAL"),
    logging.ERROR: ("\x1b[31m", "ERROR"),
    logging.WARNING: ("\x1b[33m", "WARN"),
    logging.INFO: ("\x1b[32m", "INFO"),
    logging.DEBUG: ("\x1b[35m", "DEBUG"),
}

# indexed by 1 - verbose + quiet, clamped
LEVELS = [logging.DEBUG, logging.INFO, logging.WARNING, logging.ERROR, logging.CRITICAL]


def level_tag(levelno: int, color: bool = True) -> str:
    for threshold in sorted(LEVEL_STYLES, reverse=True):
        if levelno >= threshold:
            code, tag = LEVEL_STYLES[threshold]
            return f"{code}[{tag}]\x1b[0m" if color else f"[{tag}]"
    return "[NOTSET]"


class LevelFormatter(logging.Formatter):
    """Formats records as <time> [LEVEL] message, the tag colored unless color is False."""
    """"<time> [LEVEL] message", the tag colored unless color is False."""

    def __init__(self, color: bool = True):
        super().__init__("%(asctime)s %(level_tag)s %(message)s")
        self.color = color

    def format(self, record: logging.LogRecord) -> str:
        # copy so other handlers do not see the tag
        record = copy.copy(record)
        record.level_tag = level_tag(record.levelno, self.color)
        return super().format(record)


class ConsoleHandler(logging.Handler):
    """Writes formatted records through tqdm.write so progress bars stay intact."""

    def __init__(self, level=logging.NOTSET, color: bool = True):
        super().__init__(level)
        self.setFormatter(LevelFormatter(color))

    def emit(self, record):
        try:
            tqdm.tqdm.write(self.format(record))
            self.flush()
        except Exception:
            self.handleError(record)


def get_logger(name: str = PACKAGE) -> logging.Logger:
    """Logger under the package namespace.

    The package logger gets its console handler on first use; child loggers
    ("fl_emph.learner", ...) propagate to it.
    """
    if not name.startswith(PACKAGE):
        name = f"{PACKAGE}.{name}"
    root = logging.getLogger(PACKAGE)
    if not root.handlers:
        root.addHandler(ConsoleHandler())
        root.setLevel(logging.INFO)
    return logging.getLogger(name)


def set_loglevel(verbose: Optional[Sequence[int]] = None, quiet: Optional[Sequence[int]] = None, **_) -> int:
    """Set the package level from counted -v / -q flags (INFO by default)."""
    shift = (0 if quiet is None else sum(quiet)) - (0 if verbose is None else sum(verbose))
    level = LEVELS[max(min(1 + shift, len(LEVELS) - 1), 0)]
    get_logger().setLevel(level)
    return level
