from __future__ import annotations

import hashlib
import logging
import os
import sys
import tempfile
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Union

import numpy as np
import structlog

ArrayLike = Union[float, np.ndarray]


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def db_to_linear(x_db: ArrayLike) -> ArrayLike:
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x: ArrayLike) -> ArrayLike:
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    return sha256_bytes(Path(path).read_bytes())


def configure_logging(level: str = "INFO") -> None:
    """
    Configure structlog once per process.

    Events are rendered as key=value lines on stderr so that stdout stays
    free for the CLI summaries.
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        numeric = logging.INFO
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.processors.KeyValueRenderer(key_order=["timestamp", "level", "event"]),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


@contextmanager
def atomic_path(target: Union[str, Path]) -> Iterator[Path]:
    """
    Yield a temporary path next to `target`; rename it over `target` only if
    the block completes. A crash leaves no partial file behind.
    """
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    os.close(fd)
    tmp = Path(tmp_name)
    try:
        yield tmp
        os.replace(tmp, target)
    finally:
        if tmp.exists():
            tmp.unlink()
