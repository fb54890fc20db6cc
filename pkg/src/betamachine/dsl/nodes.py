"""Syntax tree. Source positions are carried but ignored by equality."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Subsystem:
    name: str
    states: tuple
    pos: tuple = _pos()


@dataclass(frozen=True)
class SystemBlock:
    subsystems: tuple
    pos: tuple = _pos()


@dataclass(frozen=True)
class StateRef:
    """``a.x`` or ``(a.x, b.y)``: subsystems pinned to local states."""

    pins: tuple  # ((subsystem, state), ...)
    pos: tuple = _pos()


@dataclass(frozen=True)
class Name:
    ident: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class Let:
    name: str
    refs: tuple
    amps: Optional[tuple] = None
    pos: tuple = _pos()


@dataclass(frozen=True)
class Init:
    refs: tuple
    pos: tuple = _pos()


@dataclass(frozen=True)
class AnyCond:
    terms: tuple
    pos: tuple = _pos()


@dataclass(frozen=True)
class AllCond:
    terms: tuple
    pos: tuple = _pos()


@dataclass(frozen=True)
class NotCond:
    term: object
    pos: tuple = _pos()


@dataclass(frozen=True)
class ComplementCond:
    name: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class ElementCond:
    ref: StateRef
    pos: tuple = _pos()


Cond = Union[AnyCond, AllCond, NotCond, ComplementCond, ElementCond, StateRef, Name]


@dataclass(frozen=True)
class SetAction:
    target: Union[StateRef, Name]
    pos: tuple = _pos()


@dataclass(frozen=True)
class SwapAction:
    target: StateRef
    pos: tuple = _pos()


@dataclass(frozen=True)
class ApplyAction:
    operator: str
    subsystem: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class PrintAction:
    text: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class Branch:
    keyword: str
    cond: object
    actions: tuple
    pos: tuple = _pos()


@dataclass(frozen=True)
class RuleDef:
    name: str
    branches: tuple
    pos: tuple = _pos()


@dataclass(frozen=True)
class RunStmt:
    target: str
    epsilon: float
    max_steps: int
    shots: Optional[int] = None
    seed: Optional[int] = None
    mode: Optional[str] = None
    pos: tuple = _pos()


@dataclass(frozen=True)
class Program:
    system: Optional[SystemBlock] = None
    lets: tuple = ()
    init: Optional[Init] = None
    rules: tuple = ()
    run: Optional[RunStmt] = None

    @property
    def empty(self) -> bool:
        return self.system is None and not self.lets and self.init is None and not self.rules \
            and self.run is None
