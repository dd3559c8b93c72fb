"""Shared diagnostic record printed as `file:line:col: severity: message`."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SourceDiagnostic:
    severity: Severity
    line: int
    column: int
    message: str

    def render(self, filename: str) -> str:
        return f"{filename}:{self.line}:{self.column}: {self.severity}: {self.message}"


def error(line: int, column: int, message: str) -> SourceDiagnostic:
    return SourceDiagnostic(Severity.ERROR, line, column, message)


def warning(line: int, column: int, message: str) -> SourceDiagnostic:
    return SourceDiagnostic(Severity.WARNING, line, column, message)


def has_errors(diags: list[SourceDiagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)
