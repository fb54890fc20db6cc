"""Canonical pretty-printer (two-space indentation)."""

from __future__ import annotations

import json

from . import nodes as n

INDENT = "  "


def _num(x: float) -> str:
    return repr(float(x))


def _ref(r) -> str:
    if isinstance(r, n.Name):
        return r.ident
    pins = [f"{s}.{x}" for s, x in r.pins]
    return pins[0] if len(pins) == 1 else "(" + ", ".join(pins) + ")"


def _nested(c) -> bool:
    if isinstance(c, (n.AnyCond, n.AllCond)):
        return any(isinstance(t, (n.AnyCond, n.AllCond)) or _nested(t) for t in c.terms)
    if isinstance(c, n.NotCond):
        return _nested(c.term)
    return False


def _cond(c, depth: int) -> str:
    if isinstance(c, (n.AnyCond, n.AllCond)):
        head = "any" if isinstance(c, n.AnyCond) else "all"
        if not _nested(c) and not any(isinstance(t, (n.AnyCond, n.AllCond)) for t in c.terms):
            return f"{head}(" + ", ".join(_cond(t, depth) for t in c.terms) + ")"
        pad = INDENT * (depth + 1)
        inner = ",\n".join(pad + _cond(t, depth + 1) for t in c.terms)
        return f"{head}(\n{inner}\n{INDENT * depth})"
    if isinstance(c, n.NotCond):
        return "not " + _cond(c.term, depth)
    if isinstance(c, n.ComplementCond):
        return f"complement({c.name})"
    if isinstance(c, n.ElementCond):
        return f"holds({_ref(c.ref)})"
    return _ref(c)


def _action(a) -> str:
    if isinstance(a, n.SetAction):
        return f"set({_ref(a.target)})"
    if isinstance(a, n.SwapAction):
        return f"swap({_ref(a.target)})"
    if isinstance(a, n.ApplyAction):
        return f"apply({a.operator}, {a.subsystem})"
    return "print(" + json.dumps(a.text, ensure_ascii=False) + ")"


def format_program(prog: n.Program) -> str:
    if prog.empty:
        return ""
    out: list[str] = []
    if prog.system is not None:
        out.append("system {")
        for sub in prog.system.subsystems:
            out.append(f"{INDENT}subsystem {sub.name} {{")
            out.append(f"{INDENT * 2}states: " + ", ".join(sub.states))
            out.append(f"{INDENT}}}")
        out.append("}")
    if prog.lets:
        out.append("")
        for let in prog.lets:
            line = f"let {let.name} = combine(" + ", ".join(_ref(r) for r in let.refs) + ")"
            if let.amps is not None:
                line += " amps(" + ", ".join(_num(a) for a in let.amps) + ")"
            out.append(line)
    if prog.init is not None:
        out.append("")
        out.append("init " + ", ".join(_ref(r) for r in prog.init.refs))
    for rule in prog.rules:
        out.append("")
        out.append(f"rule {rule.name} {{")
        for br in rule.branches:
            acts = ", ".join(_action(a) for a in br.actions)
            out.append(f"{INDENT}{br.keyword} {_cond(br.cond, 1)} -> {acts}")
        out.append("}")
    if prog.run is not None:
        r = prog.run
        out.append("")
        line = f"run {r.target} until entropy < {_num(r.epsilon)} max {r.max_steps}"
        if r.shots is not None:
            line += f" shots {r.shots}"
        if r.seed is not None:
            line += f" seed {r.seed}"
        if r.mode is not None:
            line += f" mode {r.mode}"
        out.append(line)
    return "\n".join(out) + "\n"
