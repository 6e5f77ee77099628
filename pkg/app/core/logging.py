# core/logging.py
import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from app.core.config import settings

# stdout is reserved for command output (JSON, tables)
console = Console(stderr=True)


def configure_logging(level: Optional[str] = None) -> None:
    """Installs a single rich handler on the root logger."""
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        force=True,
    )
