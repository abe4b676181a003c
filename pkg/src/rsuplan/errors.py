"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` so the command line frontend can map
failures to the documented process exit status without a lookup table.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GEOMETRY = 3
EXIT_NUMERIC = 4


class PlanningError(Exception):
    """Base class for all errors raised by :mod:`rsuplan`."""

    exit_code = 1
    code = "PlanningError"

    def __init__(self, message: str, path: str | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.path = path

    def to_record(self) -> dict:
        return {"code": self.code, "message": self.message, "path": self.path}


class InputError(PlanningError):
    exit_code = EXIT_INPUT
    code = "InputError"


class MissingInput(InputError):
    code = "MissingInput"


class ParseError(InputError):
    """A file could not be parsed; ``line`` is 1-based when known."""

    code = "ParseError"

    def __init__(self, message: str, path: str | None = None, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, path)
        self.line = line

    def to_record(self) -> dict:
        record = super().to_record()
        record["line"] = self.line
        return record


class EmptyInput(InputError):
    code = "EmptyInput"


class GeometryError(PlanningError):
    exit_code = EXIT_GEOMETRY
    code = "GeometryError"


class NoPathFound(GeometryError):
    code = "NoPathFound"


class OutOfTerrainBounds(GeometryError):
    code = "OutOfTerrainBounds"


class DomainError(PlanningError, ValueError):
    exit_code = EXIT_NUMERIC
    code = "DomainError"
