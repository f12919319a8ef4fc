import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.traceback import install as install_rich_traceback

from scenegraph.config import settings

# Log records and progress bars go to stderr so `query --json` output stays clean.
console = Console(stderr=True)

QUIET_LOGGERS = ("matplotlib", "PIL", "numba", "torch_geometric", "py.warnings")


def setup_logging(level: Optional[str] = None, debug: Optional[bool] = None) -> None:
    """
    Route every record through one RichHandler on ``console``.

    Safe to call repeatedly; each call replaces the root handlers. Library warnings
    (torch, scikit-learn, hdbscan) are captured as log records under ``py.warnings``.
    """
    debug = settings.debug if debug is None else debug
    install_rich_traceback(console=console, show_locals=debug, suppress=[])

    logging.basicConfig(
        level=level or settings.log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[
            RichHandler(
                console=console,
                rich_tracebacks=True,
                tracebacks_show_locals=debug,
                show_path=debug,
                enable_link_path=debug,
            )
        ],
        force=True,
    )
    logging.captureWarnings(True)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.DEBUG if debug else logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


setup_logging()

logger = get_logger("scenegraph")
