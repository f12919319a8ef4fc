import os
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from scenegraph.exceptions import LockError
from .logging import get_logger

logger = get_logger(__name__)

LOCK_NAME = ".scenegraph.lock"


@contextmanager
def directory_lock(directory: Path) -> Iterator[Path]:
    """Hold an exclusive lock file in ``directory`` for the duration of a command."""
    directory.mkdir(parents=True, exist_ok=True)
    lock_path = directory / LOCK_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockError(str(lock_path))
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        logger.debug(f"Acquired lock {lock_path}")
        yield lock_path
    finally:
        lock_path.unlink(missing_ok=True)


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
