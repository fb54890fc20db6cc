"""Running bound programs."""

from __future__ import annotations

from pathlib import Path

from .. import machine
from ..errors import CapacityError
from .diagnostics import DiagnosticError, error
from .parser import parse
from .resolver import BoundProgram, resolve


def execute(bound: BoundProgram, **overrides) -> dict:
    """Run to convergence; ``overrides`` replace run-statement parameters."""
    cfg = bound.config.override(**overrides)
    try:
        report = machine.run_until_converged(bound.program, bound.initial, cfg.epsilon,
                                             cfg.max_steps, cfg.shots, cfg.mode, cfg.seed)
    except CapacityError as exc:
        raise DiagnosticError([error(str(exc), 1, 1)]) from None
    doc = report.to_dict()
    doc["combined_slots"] = [
        {"name": c.name, "index": c.index, "slot": bound.system.total_dim + j + 1,
         "support": list(c.support)}
        for j, c in enumerate(bound.program.combined)
    ]
    return doc


def load(path) -> BoundProgram:
    return resolve(parse(Path(path).read_text(encoding="utf-8")))


def run_source(text: str, **overrides) -> dict:
    return execute(resolve(parse(text)), **overrides)
