"""
Exception hierarchy shared by every stage.

Each error carries a structured ``detail`` payload (status / message / action)
and the process exit code the command line maps it to.
"""

from typing import Any


class KGRescoreError(Exception):
    exit_code: int = 5
    default_action: str = "Please check the input and try again."

    def __init__(
        self,
        message: str,
        *,
        action: str | None = None,
        stage: str | None = None,
        **extra: Any,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.action = action or self.default_action
        self.stage = stage
        self.extra = extra

    @property
    def detail(self) -> dict[str, Any]:
        detail: dict[str, Any] = {
            "status": "error",
            "error": type(self).__name__,
            "message": self.message,
            "action": self.action,
        }
        if self.stage is not None:
            detail["stage"] = self.stage
        detail.update(self.extra)
        return detail

    def __str__(self) -> str:
        return self.message


# ---------------------------------------------------------------------------
# Configuration (exit 2)
# ---------------------------------------------------------------------------


class ConfigError(KGRescoreError):
    exit_code = 2
    default_action = "Please fix the configuration file or command-line flags."


# ---------------------------------------------------------------------------
# Input parsing and lookups (exit 3)
# ---------------------------------------------------------------------------


class InputError(KGRescoreError):
    exit_code = 3
    default_action = "Please check the input files."


class MalformedLine(InputError):
    def __init__(self, line_number: int, reason: str, *, source: str | None = None):
        where = f"{source}:{line_number}" if source else f"line {line_number}"
        super().__init__(
            f"Malformed line at {where}: {reason}",
            line_number=line_number,
            reason=reason,
        )
        self.line_number = line_number
        self.reason = reason


class DuplicateRank(InputError):
    def __init__(self, utterance_id: str, rank: int):
        super().__init__(
            f"Utterance '{utterance_id}' lists rank {rank} more than once",
            utterance_id=utterance_id,
            rank=rank,
        )


class GappedRanks(InputError):
    def __init__(self, utterance_id: str, ranks: list[int]):
        super().__init__(
            f"Utterance '{utterance_id}' ranks {ranks} are not dense from 1",
            utterance_id=utterance_id,
            ranks=ranks,
        )


class UnknownEntity(InputError):
    pass


class UnknownId(InputError):
    pass


# ---------------------------------------------------------------------------
# Remote services (exit 4)
# ---------------------------------------------------------------------------


class RemoteError(KGRescoreError):
    exit_code = 4
    default_action = "Please check the endpoint or run with a warm cache."


class NetworkError(RemoteError):
    def __init__(self, message: str, *, retryable: bool, **extra: Any):
        super().__init__(message, retryable=retryable, **extra)
        self.retryable = retryable


class ProtocolError(RemoteError):
    pass


# ---------------------------------------------------------------------------
# Numerical / structural invariants (exit 5)
# ---------------------------------------------------------------------------


class InvariantError(KGRescoreError):
    exit_code = 5
    default_action = "This is an internal invariant violation; please report it."


class InvalidDimension(InvariantError):
    pass


class Degenerate(InvariantError):
    pass


class EmptyGraph(InvariantError):
    pass


class DimensionMismatch(InvariantError):
    pass


class EmptyMoleculeSet(InvariantError):
    pass


class TooFewEntities(InvariantError):
    pass


class MisalignedCosts(InvariantError):
    pass


class EmptyReference(InvariantError):
    pass
