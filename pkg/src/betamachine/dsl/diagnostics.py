"""Positioned diagnostics for the ``.beta`` front end."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import BetaError


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    column: int

    def render(self, path: str | None = None) -> str:
        where = f"{path}:" if path else ""
        return f"{where}{self.line}:{self.column}: {self.severity}: {self.message}"

    def to_dict(self) -> dict:
        return {"severity": self.severity, "message": self.message,
                "line": self.line, "column": self.column}


class DiagnosticError(BetaError):
    """Raised when parsing or resolution produces error diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.render() for d in self.diagnostics))


def error(message: str, line: int, column: int) -> Diagnostic:
    return Diagnostic("error", message, line, column)
