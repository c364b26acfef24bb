import sys
from pathlib import Path
from loguru import logger
from kgrescore.core.config import settings

logger.remove()

LOG_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} | "
    "{level: <8} | "
    "{name}:{function}:{line} | "
    "{message}"
)

_console_sink_id: int | None = logger.add(
    sink=sys.stderr,
    format=LOG_FORMAT,
    level=settings.LOG_LEVEL,
)
_file_sink_ids: dict[Path, list[int]] = {}


def set_console_level(level: str) -> None:
    global _console_sink_id
    if _console_sink_id is not None:
        logger.remove(_console_sink_id)
    _console_sink_id = logger.add(sink=sys.stderr, format=LOG_FORMAT, level=level)


def add_file_sinks(log_dir: Path) -> None:
    """Attach the debug.log / error.log pair under log_dir (idempotent per directory)."""
    log_dir = Path(log_dir).resolve()
    if log_dir in _file_sink_ids:
        return
    log_dir.mkdir(parents=True, exist_ok=True)

    debug_id = logger.add(
        sink=str(log_dir / "debug.log"),
        format=LOG_FORMAT,
        level="DEBUG" if settings.ENVIRONMENT == "development" else "INFO",
        filter=lambda record: record["level"].no <= logger.level("WARNING").no,
        rotation="10 MB",
        retention="30 days",
        compression="zip",
    )
    error_id = logger.add(
        sink=str(log_dir / "error.log"),
        format=LOG_FORMAT,
        level="ERROR",
        rotation="10 MB",
        retention="30 days",
        compression="zip",
        backtrace=True,
        diagnose=True,
    )
    _file_sink_ids[log_dir] = [debug_id, error_id]


def remove_file_sinks(log_dir: Path) -> None:
    for sink_id in _file_sink_ids.pop(Path(log_dir).resolve(), []):
        logger.remove(sink_id)


if settings.LOG_DIR is not None:
    add_file_sinks(settings.LOG_DIR)


def get_logger():
    return logger
