"""The ``.beta`` language: parse, format, resolve and execute."""

from .diagnostics import Diagnostic, DiagnosticError
from .formatter import format_program
from .interpreter import execute, load, run_source
from .parser import parse, try_parse
from .resolver import BoundProgram, RunConfig, resolve

__all__ = [
    "Diagnostic", "DiagnosticError", "format_program", "execute", "load", "run_source",
    "parse", "try_parse", "BoundProgram", "RunConfig", "resolve",
]
