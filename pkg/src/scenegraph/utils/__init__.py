from .logging import logger, get_logger, setup_logging, console
from .hashing import content_digest, short_digest
from .locking import directory_lock, atomic_write_bytes, atomic_write_text
from .geometry import normalize_angle, rotate_into_frame, Polyline

__all__ = [
    "logger",
    "get_logger",
    "setup_logging",
    "console",
    "content_digest",
    "short_digest",
    "directory_lock",
    "atomic_write_bytes",
    "atomic_write_text",
    "normalize_angle",
    "rotate_into_frame",
    "Polyline",
]
