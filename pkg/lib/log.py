# lib/log.py
import logging
import os

from rich.console import Console
from rich.logging import RichHandler

# stdout is reserved for reports; everything human-facing goes to stderr.
console = Console(stderr=True)

_configured = False


def _configure_root() -> None:
    global _configured
    if _configured:
        return
    level = os.getenv("RENYI_BET_LOG_LEVEL", "WARNING").upper()
    handler = RichHandler(console=console, show_path=False, rich_tracebacks=True)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root = logging.getLogger("renyi_bet")
    root.addHandler(handler)
    root.setLevel(getattr(logging, level, logging.WARNING))
    root.propagate = False
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """Child of the package logger, e.g. ``get_logger(__name__)``."""
    _configure_root()
    return logging.getLogger(f"renyi_bet.{name}")


def set_level(level: str) -> None:
    _configure_root()
    logging.getLogger("renyi_bet").setLevel(getattr(logging, level.upper(), logging.WARNING))
