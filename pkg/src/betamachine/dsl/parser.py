"""Recursive-descent parser for ``.beta`` sources."""

from __future__ import annotations

import math

from . import nodes as n
from .diagnostics import DiagnosticError, error
from .lexer import Token, bracket_diagnostics, tokenize

KEYWORDS = frozenset({
    "system", "subsystem", "states", "let", "combine", "amps", "init", "rule", "if", "elif",
    "any", "all", "not", "complement", "holds", "set", "swap", "apply", "print", "run",
    "until", "entropy", "max", "shots", "seed", "mode",
})
MODES = ("exact", "sampled")
OPERATORS = ("dft", "shift")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        raise DiagnosticError([error(f"{message}, found {found}", tok.line, tok.column)])

    def at(self, value: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.value == value and t.kind in ((kind,) if kind else ("punct", "ident"))

    def accept(self, value: str) -> Token | None:
        if self.at(value):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, value: str) -> Token:
        t = self.accept(value)
        if t is None:
            self.fail(f"expected {value!r}")
        return t

    def ident(self, what: str = "identifier", allow_keyword: bool = False) -> Token:
        t = self.tok
        if t.kind != "ident" or (not allow_keyword and t.value in KEYWORDS):
            self.fail(f"expected {what}")
        self.i += 1
        return t

    def number(self) -> float:
        t = self.tok
        if t.kind != "number":
            self.fail("expected a number")
        value = float(t.value)
        if not math.isfinite(value):
            self.fail("number out of range")
        self.i += 1
        return value

    def integer(self) -> int:
        t = self.tok
        if t.kind != "number" or not t.value.lstrip("+-").isdigit():
            self.fail("expected an integer")
        self.i += 1
        return int(t.value)

    def comma_list(self, item, close: str = ")"):
        items = [item()]
        while self.accept(","):
            items.append(item())
        self.expect(close)
        return tuple(items)

    @staticmethod
    def pos(t: Token) -> tuple:
        return (t.line, t.column)

    # grammar

    def program(self) -> n.Program:
        if self.tok.kind == "eof":
            return n.Program()
        system = self.system()
        lets = []
        while self.at("let"):
            lets.append(self.let())
        init = self.init() if self.at("init") else None
        rules = []
        while self.at("rule"):
            rules.append(self.rule())
        run = self.run() if self.at("run") else None
        if self.tok.kind != "eof":
            self.fail("expected 'let', 'init', 'rule' or 'run'")
        return n.Program(system, tuple(lets), init, tuple(rules), run)

    def system(self) -> n.SystemBlock:
        start = self.tok
        if not self.at("system"):
            self.fail("expected 'system'")
        self.i += 1
        self.expect("{")
        subs = []
        while self.at("subsystem"):
            subs.append(self.subsystem())
        if not subs:
            self.fail("expected 'subsystem'")
        self.expect("}")
        return n.SystemBlock(tuple(subs), self.pos(start))

    def subsystem(self) -> n.Subsystem:
        start = self.expect("subsystem")
        name = self.ident("subsystem name").value
        self.expect("{")
        self.expect("states")
        self.expect(":")
        states = [self.ident("state label", allow_keyword=True).value]
        while self.accept(","):
            states.append(self.ident("state label", allow_keyword=True).value)
        self.expect("}")
        return n.Subsystem(name, tuple(states), self.pos(start))

    def pin(self) -> tuple:
        sub = self.ident("subsystem name").value
        self.expect(".")
        return (sub, self.ident("state label", allow_keyword=True).value)

    def stateref(self) -> n.StateRef:
        start = self.tok
        if self.accept("("):
            return n.StateRef(self.comma_list(self.pin), self.pos(start))
        return n.StateRef((self.pin(),), self.pos(start))

    def ref_or_name(self):
        t = self.tok
        if t.kind == "ident" and self.peek().value == ".":
            return self.stateref()
        if self.at("("):
            return self.stateref()
        return n.Name(self.ident("state reference or combined name").value, self.pos(t))

    def let(self) -> n.Let:
        start = self.expect("let")
        name = self.ident("combined-state name").value
        self.expect("=")
        self.expect("combine")
        self.expect("(")
        refs = self.comma_list(self.stateref)
        amps = None
        if self.accept("amps"):
            self.expect("(")
            amps = self.comma_list(self.number)
        return n.Let(name, refs, amps, self.pos(start))

    def init(self) -> n.Init:
        start = self.expect("init")
        refs = [self.ref_or_name()]
        while self.accept(","):
            refs.append(self.ref_or_name())
        return n.Init(tuple(refs), self.pos(start))

    def rule(self) -> n.RuleDef:
        start = self.expect("rule")
        name = self.ident("rule name").value
        self.expect("{")
        branches = []
        while self.at("if") or self.at("elif"):
            kw = self.tok
            if branches and kw.value == "if":
                self.fail("expected 'elif'")
            if not branches and kw.value == "elif":
                self.fail("expected 'if'")
            self.i += 1
            cond = self.cond()
            self.expect("->")
            actions = [self.action()]
            while self.accept(","):
                actions.append(self.action())
            branches.append(n.Branch(kw.value, cond, tuple(actions), self.pos(kw)))
        if not branches:
            self.fail("expected 'if'")
        self.expect("}")
        return n.RuleDef(name, tuple(branches), self.pos(start))

    def cond(self):
        t = self.tok
        if t.kind == "ident" and self.peek().value == "(" and t.value in ("any", "all"):
            self.i += 2
            terms = self.comma_list(self.cond)
            cls = n.AnyCond if t.value == "any" else n.AllCond
            return cls(terms, self.pos(t))
        if self.accept("not"):
            return n.NotCond(self.cond(), self.pos(t))
        if t.kind == "ident" and t.value == "complement" and self.peek().value == "(":
            self.i += 2
            name = self.ident("combined-state name").value
            self.expect(")")
            return n.ComplementCond(name, self.pos(t))
        if t.kind == "ident" and t.value == "holds" and self.peek().value == "(":
            self.i += 2
            ref = n.StateRef((self.pin(),), self.pos(self.toks[self.i]))
            self.expect(")")
            return n.ElementCond(ref, self.pos(t))
        if t.kind == "ident" or self.at("("):
            return self.ref_or_name()
        self.fail("expected a condition")

    def action(self):
        t = self.tok
        if self.accept("set"):
            self.expect("(")
            target = self.ref_or_name()
            self.expect(")")
            return n.SetAction(target, self.pos(t))
        if self.accept("swap"):
            self.expect("(")
            start = self.tok
            ref = n.StateRef((self.pin(),), self.pos(start))
            self.expect(")")
            return n.SwapAction(ref, self.pos(t))
        if self.accept("apply"):
            self.expect("(")
            op = self.tok
            if op.kind != "ident" or op.value not in OPERATORS:
                self.fail(f"expected an operator name ({', '.join(OPERATORS)})")
            self.i += 1
            self.expect(",")
            sub = self.ident("subsystem name").value
            self.expect(")")
            return n.ApplyAction(op.value, sub, self.pos(t))
        if self.accept("print"):
            self.expect("(")
            s = self.tok
            if s.kind != "string":
                self.fail("expected a string")
            self.i += 1
            self.expect(")")
            return n.PrintAction(s.value, self.pos(t))
        self.fail("expected an action (set, swap, apply, print)")

    def run(self) -> n.RunStmt:
        start = self.expect("run")
        target = self.ident("rule name or 'all'", allow_keyword=True)
        if target.value in KEYWORDS and target.value != "all":
            self.fail("expected rule name or 'all'", target)
        self.expect("until")
        self.expect("entropy")
        self.expect("<")
        eps = self.number()
        self.expect("max")
        max_steps = self.integer()
        opts: dict = {}
        while self.tok.kind == "ident" and self.tok.value in ("shots", "seed", "mode"):
            key = self.tok
            if key.value in opts:
                self.fail(f"duplicate option {key.value!r}", key)
            self.i += 1
            if key.value == "mode":
                m = self.tok
                if m.kind != "ident" or m.value not in MODES:
                    self.fail("expected 'exact' or 'sampled'")
                self.i += 1
                opts["mode"] = m.value
            else:
                opts[key.value] = self.integer()
        return n.RunStmt(target.value, eps, max_steps, pos=self.pos(start), **opts)


def parse(text: str) -> n.Program:
    """Parse source text; raises ``DiagnosticError`` with positioned messages."""
    tokens = tokenize(text)
    brackets = bracket_diagnostics(tokens)
    if brackets:
        raise DiagnosticError(brackets)
    return _Parser(tokens).program()


def try_parse(text: str):
    """``(program, [])`` on success, ``(None, diagnostics)`` otherwise."""
    try:
        return parse(text), []
    except DiagnosticError as exc:
        return None, exc.diagnostics
    except RecursionError:
        return None, [error("nesting too deep", 1, 1)]
