"""
utils/logger.py

Project-wide logging on top of rich. Modules grab a child logger with
get_logger(__name__); the CLI sets the level once with set_verbosity().
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

ROOT_NAME = "pvweights"

console = Console(stderr=True)
_root = logging.getLogger(ROOT_NAME)

if not _root.handlers:
    _handler = RichHandler(console=console, show_time=False, show_path=False, markup=False)
    _handler.setFormatter(logging.Formatter("%(message)s"))
    _root.addHandler(_handler)
    _root.setLevel(logging.WARNING)
    _root.propagate = False


def get_logger(name: str) -> logging.Logger:
    if name == ROOT_NAME or name.startswith(ROOT_NAME + "."):
        return logging.getLogger(name)
    return _root.getChild(name)


def set_verbosity(verbose: int) -> None:
    """0 -> WARNING, 1 -> INFO, 2 or more -> DEBUG."""
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    _root.setLevel(level)


def log_success(msg): _root.info(f"[OK] {msg}")
def log_error(msg): _root.error(msg)
