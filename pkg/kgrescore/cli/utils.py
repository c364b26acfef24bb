import functools
import json
from typing import Any, Callable, TypeVar

import typer
from rich.console import Console

from kgrescore.core.errors import KGRescoreError
from kgrescore.core.logging import get_logger

logger = get_logger()

console = Console()
err_console = Console(stderr=True)

F = TypeVar("F", bound=Callable[..., Any])


def exit_on_error(command: F) -> F:
    """Turn a KGRescoreError into its exit code and a structured message on stderr."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except KGRescoreError as e:
            err_console.print_json(json.dumps(e.detail, default=str))
            raise typer.Exit(code=e.exit_code) from e
        except typer.Exit:
            raise
        except Exception as e:
            logger.exception(f"Command {command.__name__} failed: {e}")
            err_console.print_json(
                json.dumps(
                    {
                        "status": "error",
                        "error": type(e).__name__,
                        "message": str(e),
                        "action": "This is an internal invariant violation; please report it.",
                    }
                )
            )
            raise typer.Exit(code=5) from e

    return wrapper  # type: ignore[return-value]
