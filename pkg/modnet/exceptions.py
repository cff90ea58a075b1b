# modnet/exceptions.py
"""
Error hierarchy for modnet-design.

Every error raised on purpose by the toolkit derives from ModnetError so the
command layer can map it to an exit code and a one-line message with
file/row/constraint context.
"""
from typing import Any, Optional


class ModnetError(Exception):
    """Base class for all modnet-design errors."""

    exit_code: int = 1


class NetworkDataError(ModnetError):
    """Malformed or inconsistent network input (CSV tables or in-memory rows)."""

    exit_code = 2

    def __init__(self, message: str, file: Optional[str] = None, row: Optional[int] = None) -> None:
        self.file = file
        self.row = row
        location = ""
        if file is not None:
            location = f"{file}"
            if row is not None:
                location += f", row {row}"
            location = f" [{location}]"
        elif row is not None:
            location = f" [row {row}]"
        super().__init__(f"{message}{location}")


class ConfigError(ModnetError):
    """Invalid configuration value or unreadable configuration file."""

    exit_code = 2


class WaitTimeDomainError(ModnetError, ValueError):
    """Wait-time formula evaluated outside its domain (zero rates, empty attractive set)."""


class ModelConstructionError(ModnetError):
    """A solver model could not be assembled from the given data."""

    exit_code = 2


class SolverError(ModnetError):
    """The solver kernel returned a status the caller cannot work with."""

    def __init__(self, message: str, status: Any = None, destination: Any = None) -> None:
        self.status = status
        self.destination = destination
        suffix = f" (destination {destination})" if destination is not None else ""
        super().__init__(f"{message}{suffix}")


class SubproblemInfeasibleError(SolverError):
    """A Benders subproblem was infeasible; the sentinel fleet should make that impossible."""


class SolverLimitReached(ModnetError):
    """A driver stopped on its time or iteration limit before closing the gap."""

    exit_code = 3

    def __init__(self, message: str, result: Any = None) -> None:
        self.result = result
        super().__init__(message)
