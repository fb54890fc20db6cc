import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from betamachine import machine
from betamachine.dsl import (DiagnosticError, execute, format_program, parse, resolve, run_source,
                             try_parse)
from betamachine.dsl import nodes as n

CORPUS = sorted((Path(__file__).parent / "corpus").glob("*.beta"))


def src(path):
    return path.read_text(encoding="utf-8")


def in_bounds(text, diag):
    lines = text.split("\n")
    return 1 <= diag.line <= len(lines) and 1 <= diag.column <= len(lines[diag.line - 1]) + 1


def test_corpus_size():
    assert len(CORPUS) >= 20


# -- parsing ------------------------------------------------------------------------


def test_listing_program_shape(putnam_path):
    prog = parse(src(putnam_path))
    assert len(prog.rules) == 1
    (rule,) = prog.rules
    assert [b.keyword for b in rule.branches] == ["if", "elif"]
    first, second = rule.branches
    assert isinstance(first.cond, n.AnyCond) and len(first.cond.terms) == 3
    assert second.cond == n.Name("combined_sv")


def test_minimal_system():
    prog = parse("system { subsystem c { states: h, t } }")
    assert prog.system.subsystems == (n.Subsystem("c", ("h", "t")),)


def test_unclosed_paren_diagnostic():
    ast, diags = try_parse("if any(")
    assert ast is None
    assert (diags[0].line, diags[0].column) == (1, 7)
    assert "unclosed" in diags[0].message


@pytest.mark.parametrize("text, line, col", [
    ("system { subsystem a { states: x, y } }\nrule r { if a.x -> jump() }", 2, 20),
    ("system { subsystem a { states: x, y } }\nrule r { elif a.x -> print(\"x\") }", 2, 10),
    ("system { subsystem a { states: x y } }", 1, 34),
    ("system { subsystem a { states: x, y } }\nrun all until entropy < 0 max 1.5", 2, 31),
    ("system { subsystem a { states: x, y } } )", 1, 41),
    ('system { subsystem a { states: x, y } }\nrule r { if a.x -> print("open) }', 2, 26),
    ("system { subsystem a { states: x, y } }\n\n  @", 3, 3),
])
def test_syntax_error_positions(text, line, col):
    ast, diags = try_parse(text)
    assert ast is None and diags
    assert (diags[0].line, diags[0].column) == (line, col)
    assert all(in_bounds(text, d) for d in diags)


def test_identifiers_are_nfc_normalised():
    composed = "system { subsystem café { states: x, y } }"
    decomposed = "system { subsystem café { states: x, y } }"
    assert parse(composed) == parse(decomposed)


def test_positions_do_not_affect_equality():
    a = parse("system { subsystem a { states: x, y } }")
    b = parse("\n\n   system {\n subsystem a {\nstates: x,\n y } }")
    assert a == b


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_corpus_roundtrip(path):
    first = parse(src(path))
    text = format_program(first)
    assert parse(text) == first
    assert format_program(parse(text)) == text


def test_empty_program_formats_to_empty():
    assert format_program(parse("")) == ""
    assert format_program(parse("  # only a comment\n")) == ""


def test_nested_formatting_uses_two_spaces():
    text = format_program(parse(src(Path(__file__).parent / "corpus" / "04_nested.beta")))
    assert "  if any(\n    all(a.x, b.v),\n    all(\n      a.y,\n      any(b.u, (a.x, b.u))\n    )\n  ) -> print(\"deep\")" in text


def test_shipped_program_is_canonical_apart_from_comments(putnam_path):
    body = "".join(line for line in src(putnam_path).splitlines(keepends=True) if not line.startswith("#"))
    assert format_program(parse(body)) == body


# -- fuzzing diagnostics ----------------------------------------------------------------


ALPHABET = st.sampled_from(list("{}(),.:=<->\"#\n abcxyz019éα") + [
    "system", "subsystem", "states", "let", "combine", "rule", "if", "elif", "any", "all", "not",
    "print", "run", "until", "entropy", "max", "init", "set", "swap", " ", "\n"])


@settings(max_examples=400, deadline=None)
@given(st.lists(ALPHABET, max_size=40).map("".join))
def test_parse_is_total_and_diagnostics_in_bounds(text):
    ast, diags = try_parse(text)
    assert (ast is None) == bool(diags)
    assert all(in_bounds(text, d) for d in diags)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(CORPUS), st.data())
def test_mutated_corpus_never_crashes(path, data):
    text = src(path)
    if not text:
        return
    i = data.draw(st.integers(0, len(text) - 1))
    j = data.draw(st.integers(i, min(len(text), i + 8)))
    insert = data.draw(st.sampled_from(["", "(", ")", "{", ",", "x", "\n", "not ", "\""]))
    mutated = text[:i] + insert + text[j:]
    ast, diags = try_parse(mutated)
    assert all(in_bounds(mutated, d) for d in diags)
    if ast is not None:
        try:
            resolve(ast)
        except DiagnosticError as exc:
            assert exc.diagnostics
            assert all(in_bounds(mutated, d) for d in exc.diagnostics)


# -- resolution -----------------------------------------------------------------------


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_corpus_resolves(path):
    ast = parse(src(path))
    if ast.empty:
        with pytest.raises(DiagnosticError):
            resolve(ast)
        return
    bound = resolve(ast)
    assert bound.program.slots == bound.system.total_dim + len(bound.program.combined)


def test_combined_over_coin_and_die_gets_slot_ten():
    bound = resolve(parse(src(Path(__file__).parent / "corpus" / "03_coin_die.beta")))
    (c,) = bound.program.combined
    assert c.support == (1, 2) and c.index == 10


def test_distinct_combined_definitions_get_distinct_indices():
    bound = resolve(parse(src(Path(__file__).parent / "corpus" / "13_multi_combined.beta")))
    idx = [c.index for c in bound.program.combined]
    assert len(set(idx)) == len(idx) == 3


BASE = """system { subsystem a { states: p, q, r, s } subsystem b { states: u, v } }
let c = combine(a.p, a.q)
rule go { if any(a.p, c) -> print("x") elif complement(c) -> set(a.r) }
run go until entropy < 1e-9 max 3
"""

MUTATIONS = [
    ("unknown state", BASE.replace("any(a.p", "any(a.z"), "unknown state"),
    ("unknown subsystem", BASE.replace("any(a.p", "any(k.p"), "unknown subsystem"),
    ("odd dimension", BASE.replace("states: u, v", "states: u, v, w"), "even"),
    ("duplicate support", BASE.replace("let c = combine(a.p, a.q)",
                                       "let c = combine(a.p, a.q)\nlet d = combine(a.q, a.p)"), "same support"),
    ("repeated constituent", BASE.replace("combine(a.p, a.q)", "combine(a.p, a.p)"), "repeats"),
    ("single constituent", BASE.replace("combine(a.p, a.q)", "combine(a.p)"), "at least two"),
    ("unknown combined", BASE.replace("complement(c)", "complement(e)"), "unknown combined"),
    ("unknown run target", BASE.replace("run go", "run stop"), "unknown rule"),
    ("duplicate subsystem", BASE.replace("subsystem b", "subsystem a"), "duplicate subsystem"),
    ("duplicate state", BASE.replace("states: u, v", "states: u, u"), "duplicate state"),
    ("amplitude count", BASE.replace("combine(a.p, a.q)", "combine(a.p, a.q) amps(1)"), "amplitudes"),
    ("zero amplitude", BASE.replace("combine(a.p, a.q)", "combine(a.p, a.q) amps(1, 0)"), "nonzero"),
    ("name reuse", BASE.replace("let c =", "let a ="), "already defined"),
    ("double pin", BASE.replace("any(a.p, c)", "any((a.p, a.q), c)"), "pinned twice"),
    ("duplicate rule", BASE.replace('run go', 'rule go { if a.p -> print("y") }\nrun go'), "duplicate rule"),
    ("slot collision", """system { subsystem a { states: s1, s2, s3, s4, s5, s6, s7, s8 } }
let x = combine(a.s1, a.s4)
let y = combine(a.s2, a.s3)
""", "collides"),
]

NEUTRAL = [
    BASE.replace("let c", "let renamed").replace("(a.p, c)", "(a.p, renamed)").replace("complement(c)", "complement(renamed)"),
    BASE.replace("states: u, v", "states: u, v, w, t"),
    BASE.replace("combine(a.p, a.q)", "combine(a.p, a.q) amps(3, 4)"),
    BASE.replace("run go", "run all"),
    BASE.replace("combine(a.p, a.q)", "combine(a.p, (a.q, b.v))"),
]


def test_base_program_resolves():
    resolve(parse(BASE))


@pytest.mark.parametrize("name, text, fragment", MUTATIONS, ids=[m[0] for m in MUTATIONS])
def test_resolver_rejects_invariant_violations(name, text, fragment):
    ast, diags = try_parse(text)
    if ast is not None:
        with pytest.raises(DiagnosticError) as info:
            resolve(ast)
        diags = info.value.diagnostics
    assert any(fragment in d.message for d in diags), [d.message for d in diags]
    assert all(in_bounds(text, d) for d in diags)


@pytest.mark.parametrize("text", NEUTRAL)
def test_resolver_accepts_valid_variants(text):
    resolve(parse(text))


# -- execution -----------------------------------------------------------------------


def test_listing_program_fires_only_combined_branch(putnam_path):
    report = run_source(src(putnam_path))
    assert report["branches_fired"] == [{"t": 1, "rule": "putnam", "branch": 2}]
    assert [p["text"] for p in report["prints"]] == ["conjunction true"]


def test_program_without_rules_converges_at_first_step():
    report = run_source("system { subsystem a { states: x, y } }")
    assert report["T"] == 1 and report["converged"]


def test_execution_deterministic():
    text = src(Path(__file__).parent / "corpus" / "09_apply.beta")
    a = json.dumps(run_source(text), sort_keys=True)
    b = json.dumps(run_source(text), sort_keys=True)
    assert a == b


def test_overrides_replace_run_statement():
    bound = resolve(parse(src(Path(__file__).parent / "corpus" / "20_run_options.beta")))
    rep = execute(bound, shots=16, max_steps=2)
    assert rep["shots"] == 16 and rep["seed"] == 9 and rep["max_steps"] == 2


def test_swap_program_flips_second_subsystem():
    bound = resolve(parse(src(Path(__file__).parent / "corpus" / "05_swap.beta")))
    res = machine.step(bound.program, bound.initial, 1, machine.MemoryStore())
    assert bound.system.basis_label(int(np.argmax(res.state.probabilities())) + 1) == "(a.x, b.v)"
    rep = execute(bound)
    # a pure start converges at once; the swap still fires within that step
    assert rep["T"] == 1 and rep["branches_fired"] == [{"t": 1, "rule": "flip", "branch": 1}]


def test_prints_in_execution_order():
    rep = run_source(src(Path(__file__).parent / "corpus" / "10_two_rules.beta"))
    assert [(p["t"], p["rule"]) for p in rep["prints"]] == [(1, "second"), (2, "second")]
    assert [(f["t"], f["rule"]) for f in rep["branches_fired"]] == [(1, "first"), (1, "second"), (2, "second")]
    assert rep["T"] == 2


def _combined_atoms(cond):
    if isinstance(cond, machine.Atom):
        return [cond]
    if isinstance(cond, machine.Not):
        return _combined_atoms(cond.term)
    return [a for t in cond.terms for a in _combined_atoms(t)]


def test_combined_atoms_fire_without_constituents():
    """For every corpus program and every combined atom in a rule, some state
    makes the combined slot true while every constituent is false."""
    checked = 0
    for path in CORPUS:
        ast = parse(src(path))
        if ast.empty:
            continue
        bound = resolve(ast)
        big_m = bound.system.total_dim
        for rule in bound.program.rules:
            for br in rule.branches:
                for atom in _combined_atoms(br.condition):
                    if atom.slot <= big_m or not atom.polarity:
                        continue
                    j = atom.slot - big_m - 1
                    comb = bound.program.combined[j]
                    outside = next(m for m in range(1, big_m + 1) if m not in comb.support)
                    forced = {j: 1.0}
                    state = machine.initial_state(bound.system, bound.system.basis(outside),
                                                  bound.program.combined, forced)
                    phi = machine.measure_spectrum(state, 64)
                    constituents = machine.AnyOf(tuple(machine.Atom(m) for m in comb.support))
                    assert machine.holds(atom, phi)
                    assert not machine.holds(constituents, phi)
                    checked += 1
    assert checked >= 8
