"""Binding of a parsed program to a composite system and machine program."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import linalg, logic, machine
from ..errors import BetaError
from . import nodes as n
from .diagnostics import Diagnostic, DiagnosticError, error
from .parser import KEYWORDS


@dataclass(frozen=True)
class RunConfig:
    epsilon: float = machine.DEFAULT_EPSILON
    max_steps: int = machine.DEFAULT_MAX_STEPS
    shots: int = machine.DEFAULT_SHOTS
    seed: int = 0
    mode: str = "exact"

    def override(self, **kw) -> "RunConfig":
        vals = {k: v for k, v in kw.items() if v is not None}
        cfg = RunConfig(**{**self.__dict__, **vals})
        if cfg.epsilon <= 0 or not math.isfinite(cfg.epsilon):
            raise DiagnosticError([error("epsilon must be a positive number", 1, 1)])
        if cfg.shots < 1 or cfg.max_steps < 1:
            raise DiagnosticError([error("shots and max steps must be >= 1", 1, 1)])
        return cfg


@dataclass(frozen=True, eq=False)
class BoundProgram:
    system: logic.CompositeSystem
    program: machine.HypothesisProgram
    initial: machine.MachineState
    config: RunConfig
    combined_names: tuple = ()
    conditions: dict = field(default_factory=dict)


def local_operator(system: logic.CompositeSystem, sub: int, op: str) -> np.ndarray:
    """Operator ``op`` on one subsystem, identity elsewhere."""
    d = system.subsystem_dims[sub]
    if op == "dft":
        j = np.arange(d)
        local = np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)
    elif op == "shift":
        local = np.roll(np.eye(d), 1, axis=0)
    else:
        raise ValueError(f"unknown operator {op!r}")
    factors = [local if k == sub else np.eye(dk) for k, dk in enumerate(system.subsystem_dims)]
    return linalg.tensor_all(factors)


class _Resolver:
    def __init__(self, prog: n.Program):
        self.prog = prog
        self.diags: list[Diagnostic] = []
        self.subs: dict[str, int] = {}
        self.labels: list[dict[str, int]] = []
        self.combined: dict[str, int] = {}

    def err(self, msg: str, node) -> None:
        line, col = node.pos if node.pos != (0, 0) else (1, 1)
        self.diags.append(error(msg, line, col))

    def bail(self):
        if self.diags:
            raise DiagnosticError(self.diags)

    def resolve(self) -> BoundProgram:
        prog = self.prog
        if prog.system is None:
            raise DiagnosticError([error("program has no system block", 1, 1)])
        system = self.system(prog.system)
        combined = self.lets(system)
        self.bail()
        forced, vector = self.init(system)
        rules = self.rules(system)
        config = self.run_config()
        self.bail()
        try:
            hp = machine.HypothesisProgram(system, rules, combined)
        except BetaError as exc:
            raise DiagnosticError([error(str(exc), 1, 1)]) from None
        initial = machine.initial_state(system, vector, combined, forced)
        return BoundProgram(system, hp, initial, config, tuple(c.name for c in combined))

    def system(self, block: n.SystemBlock) -> logic.CompositeSystem | None:
        dims, names, labels = [], [], []
        for sub in block.subsystems:
            if sub.name in self.subs:
                self.err(f"duplicate subsystem {sub.name!r}", sub)
                continue
            table: dict[str, int] = {}
            for i, lab in enumerate(sub.states):
                if lab in table:
                    self.err(f"duplicate state {lab!r} in subsystem {sub.name!r}", sub)
                table[lab] = i
            if len(sub.states) % 2:
                self.err(f"subsystem {sub.name!r} has {len(sub.states)} states; the count must be even", sub)
            self.subs[sub.name] = len(names)
            self.labels.append(table)
            dims.append(len(sub.states))
            names.append(sub.name)
            labels.append(sub.states)
        self.bail()
        try:
            return logic.build_composite(dims, names, labels)
        except BetaError as exc:
            raise DiagnosticError([error(str(exc), *block.pos)]) from None

    def index(self, system, ref: n.StateRef) -> int | None:
        """Standard index of a reference; unpinned subsystems take their first state."""
        local = [0] * len(system.subsystem_dims)
        seen = set()
        for sub, lab in ref.pins:
            if sub not in self.subs:
                self.err(f"unknown subsystem {sub!r}", ref)
                return None
            k = self.subs[sub]
            if k in seen:
                self.err(f"subsystem {sub!r} pinned twice", ref)
                return None
            seen.add(k)
            if lab not in self.labels[k]:
                self.err(f"unknown state {sub}.{lab}", ref)
                return None
            local[k] = self.labels[k][lab]
        return system.index_of(local)

    def lets(self, system) -> list[logic.CombinedState]:
        out: list[logic.CombinedState] = []
        supports: dict[frozenset, str] = {}
        for let in self.prog.lets:
            if let.name in self.combined or let.name in self.subs:
                self.err(f"name {let.name!r} already defined", let)
                continue
            idx = [self.index(system, r) for r in let.refs]
            if None in idx:
                continue
            if len(set(idx)) != len(idx):
                self.err(f"combined state {let.name!r} repeats a constituent", let)
                continue
            if let.amps is not None and len(let.amps) != len(idx):
                self.err(f"{let.name!r}: {len(let.amps)} amplitudes for {len(idx)} constituents", let)
                continue
            key = frozenset(idx)
            if key in supports:
                self.err(f"{let.name!r} has the same support as {supports[key]!r}", let)
                continue
            try:
                cs = logic.make_combined_state(system, idx, let.amps, let.name)
                logic.check_slot_collisions([*out, cs])
            except BetaError as exc:
                self.err(str(exc), let)
                continue
            supports[key] = let.name
            self.combined[let.name] = len(out)
            out.append(cs)
        return out

    def init(self, system):
        forced: dict[int, float] = {}
        picks: list[int] = []
        if self.prog.init is not None:
            for ref in self.prog.init.refs:
                if isinstance(ref, n.Name):
                    if ref.ident not in self.combined:
                        self.err(f"unknown combined state {ref.ident!r}", ref)
                    else:
                        forced[self.combined[ref.ident]] = 1.0
                    continue
                m = self.index(system, ref)
                if m is None:
                    continue
                if m in picks:
                    self.err("state listed twice in init", ref)
                picks.append(m)
        picks = picks or [1]
        vec = np.zeros(system.total_dim, dtype=complex)
        vec[[m - 1 for m in picks]] = 1 / math.sqrt(len(picks))
        return forced, vec

    def cond(self, system, c):
        big_m = system.total_dim
        if isinstance(c, n.StateRef):
            m = self.index(system, c)
            return None if m is None else machine.Atom(m)
        if isinstance(c, n.Name):
            if c.ident not in self.combined:
                self.err(f"unknown combined state {c.ident!r}", c)
                return None
            return machine.Atom(big_m + self.combined[c.ident] + 1)
        if isinstance(c, n.ComplementCond):
            if c.name not in self.combined:
                self.err(f"unknown combined state {c.name!r}", c)
                return None
            return machine.Atom(big_m + self.combined[c.name] + 1, polarity=False)
        if isinstance(c, n.ElementCond):
            (sub, lab), = c.ref.pins
            if self.index(system, c.ref) is None:
                return None
            k, s = self.subs[sub], self.labels[self.subs[sub]][lab]
            return machine.AnyOf(tuple(machine.Atom(m) for m in range(1, big_m + 1)
                                       if system.local_states(m)[k] == s))
        if isinstance(c, n.NotCond):
            inner = self.cond(system, c.term)
            return None if inner is None else machine.Not(inner)
        terms = [self.cond(system, t) for t in c.terms]
        if None in terms:
            return None
        return (machine.AnyOf if isinstance(c, n.AnyCond) else machine.AllOf)(tuple(terms))

    def action(self, system, a):
        if isinstance(a, n.PrintAction):
            return machine.Print(a.text)
        if isinstance(a, n.SetAction):
            if isinstance(a.target, n.Name):
                if a.target.ident not in self.combined:
                    self.err(f"unknown combined state {a.target.ident!r}", a.target)
                    return None
                return machine.SetCombined(self.combined[a.target.ident], True)
            m = self.index(system, a.target)
            return None if m is None else machine.SetState(m)
        if isinstance(a, n.SwapAction):
            (sub, lab), = a.target.pins
            if self.index(system, a.target) is None:
                return None
            return machine.Swap(self.subs[sub], self.labels[self.subs[sub]][lab])
        if a.subsystem not in self.subs:
            self.err(f"unknown subsystem {a.subsystem!r}", a)
            return None
        k = self.subs[a.subsystem]
        return machine.Apply(local_operator(system, k, a.operator), f"{a.operator}({a.subsystem})")

    def rules(self, system) -> list[machine.Rule]:
        out = []
        seen = set()
        for rd in self.prog.rules:
            if rd.name in seen:
                self.err(f"duplicate rule {rd.name!r}", rd)
            seen.add(rd.name)
            branches = []
            for br in rd.branches:
                cond = self.cond(system, br.cond)
                acts = [self.action(system, a) for a in br.actions]
                if cond is not None and None not in acts:
                    branches.append(machine.Branch(cond, tuple(acts)))
            out.append(machine.Rule(rd.name, tuple(branches)))
        run = self.prog.run
        if run is not None and run.target != "all":
            if run.target not in seen:
                self.err(f"run names unknown rule {run.target!r}", run)
            out = [r for r in out if r.name == run.target]
        return out

    def run_config(self) -> RunConfig:
        r = self.prog.run
        if r is None:
            return RunConfig()
        if r.epsilon <= 0:
            self.err("entropy threshold must be positive", r)
        if r.max_steps < 1:
            self.err("max steps must be >= 1", r)
        if r.shots is not None and r.shots < 1:
            self.err("shots must be >= 1", r)
        if r.seed is not None and not 0 <= r.seed < 2 ** 64:
            self.err("seed must fit in 64 bits", r)
        return RunConfig(r.epsilon, r.max_steps, r.shots or machine.DEFAULT_SHOTS,
                         r.seed or 0, r.mode or "exact")


def resolve(prog: n.Program) -> BoundProgram:
    """Bind names and lower conditions; raises ``DiagnosticError`` on any violation."""
    return _Resolver(prog).resolve()
