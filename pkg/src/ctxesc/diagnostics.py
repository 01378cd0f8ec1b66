"""Positions, diagnostics, and the error types shared across the package."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Severity(enum.Enum):
    WARNING = "warning"
    ERROR = "error"


@dataclass(frozen=True)
class Position:
    file: str
    line: int
    col: int

    def advance(self, text: str) -> "Position":
        """Position after consuming ``text`` starting here."""
        n = text.count("\n")
        if n:
            return Position(self.file, self.line + n, len(text) - text.rindex("\n"))
        return Position(self.file, self.line, self.col + len(text))

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str
    position: Position

    def __str__(self) -> str:
        return f"{self.position}: {self.severity.value}: {self.message}"


def has_errors(diagnostics) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)


def warning(message: str, position: Position) -> Diagnostic:
    return Diagnostic(Severity.WARNING, message, position)


def error(message: str, position: Position) -> Diagnostic:
    return Diagnostic(Severity.ERROR, message, position)


class CompositionError(Exception):
    """Base for errors raised by this package."""


class TableError(CompositionError):
    """A transition table failed to parse, validate, or link."""


class PlanError(CompositionError):
    """A compiled plan is malformed or was requested despite blocking errors."""


class RenderError(CompositionError):
    """Rendering failed; no partial output is produced."""

    def __init__(self, message: str, position: Position | None = None):
        self.position = position
        self.message = message
        super().__init__(f"{position}: {message}" if position else message)
