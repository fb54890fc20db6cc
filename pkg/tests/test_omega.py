import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from betamachine import omega
from betamachine.errors import CapacityError, DomainError

TAU = (1 + math.sqrt(5)) / 2


def fib_oracle(n):
    """Standard Fibonacci numbers F(0)=0, F(1)=1 by plain integer recurrence."""
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


# -- classification --------------------------------------------------------------


def sympy_irrational_spectrum(a, b, c, d):
    """Oracle: ask sympy whether the eigenvalues are real and irrational."""
    lam = sympy.Matrix([[a, b], [c, d]]).eigenvals()
    return all(v.is_real and v.is_irrational for v in lam)


def test_exhaustive_classification_matches_symbolic_oracle():
    verdicts = omega.classify_binary_2x2()
    assert len(verdicts) == 16
    for v in verdicts:
        assert v.in_omega == sympy_irrational_spectrum(*v.matrix.rows[0], *v.matrix.rows[1])


def test_exactly_fibonacci_and_its_relabelling_in_omega():
    members = {tuple(map(tuple, v.matrix.rows)) for v in omega.classify_binary_2x2() if v.in_omega}
    assert members == {((1, 1), (1, 0)), ((0, 1), (1, 1))}


def test_fibonacci_verdict():
    v = omega.classify(omega.IntMatrix2.from_rows([[1, 1], [1, 0]]))
    assert v.in_omega and v.discriminant == 5
    assert v.eigenvalues[0] == pytest.approx(TAU, abs=1e-12)


def test_identity_verdict():
    v = omega.classify(omega.IntMatrix2.from_rows([[1, 0], [0, 1]]))
    assert not v.in_omega and v.discriminant == 0


def test_report_flags_uniqueness_discrepancy():
    rep = omega.classification_report()
    assert rep["count"] == 16
    assert len(rep["in_omega"]) == 2
    assert any("relabelling" in note for note in rep["notes"])


@settings(max_examples=200, deadline=None)
@given(*[st.integers(-30, 30)] * 4)
def test_transpose_preserves_verdict(a, b, c, d):
    m = omega.IntMatrix2(a, b, c, d)
    assert omega.classify(m).in_omega == omega.classify(m.transpose()).in_omega


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 30))
def test_perfect_square_exact(n):
    assert omega.is_perfect_square(n) == (math.isqrt(n) ** 2 == n)
    assert omega.is_perfect_square(n * n)


# -- Fibonacci growth -------------------------------------------------------------


@pytest.mark.parametrize("n, value", [(0, 1), (2, 2), (9, 55)])
def test_fib_closed_form_examples(n, value):
    assert omega.fib_closed_form(n) == value


def test_fib_closed_form_matches_recurrence_over_whole_range():
    for n in range(0, omega.FIB_MAX_N + 1):
        assert omega.fib_closed_form(n) == fib_oracle(n + 1)
        assert omega.fib_iterate(n) == (fib_oracle(n + 1), fib_oracle(n))


def test_fib_closed_form_additive():
    for n in range(2, 91):
        assert omega.fib_closed_form(n) == omega.fib_closed_form(n - 1) + omega.fib_closed_form(n - 2)


def test_fib_range_errors():
    with pytest.raises(CapacityError):
        omega.fib_closed_form(91)
    with pytest.raises(DomainError):
        omega.fib_closed_form(-1)


@pytest.mark.parametrize("n, approx", [(1, 0.382), (2, 0.118)])
def test_golden_ratio_gap_examples(n, approx):
    assert omega.golden_ratio_gap(n) == pytest.approx(approx, abs=5e-4)


def test_golden_ratio_gap_decreases_and_is_small_at_20():
    gaps = [omega.golden_ratio_gap(n) for n in range(1, 40)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert omega.golden_ratio_gap(20) < 1e-7
    direct = abs(fib_oracle(22) / fib_oracle(21) - TAU)
    assert omega.golden_ratio_gap(20) == pytest.approx(direct, rel=1e-6)


# -- Euclid ---------------------------------------------------------------------


@pytest.mark.parametrize("p, q, quotients, gcd", [
    (34, 55, (1, 1, 1, 1, 1, 1, 1, 2), 1),
    (4, 8, (2,), 4),
    (1, 1, (1,), 1),
])
def test_euclid_examples(p, q, quotients, gcd):
    tr = omega.euclid_trace(p, q)
    assert tr.quotients == quotients and tr.gcd == gcd


def test_euclid_fibonacci_pairs_are_worst_case():
    for n in range(3, 26):
        tr = omega.euclid_trace(fib_oracle(n), fib_oracle(n + 1))
        assert tr.steps == n - 1
        assert set(tr.quotients[:-1]) <= {1}
        assert tr.states[-1] == (2, 1)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10 ** 9), st.integers(0, 10 ** 9))
def test_euclid_step_invariants(p, extra):
    q = p + extra
    tr = omega.euclid_trace(p, q)
    assert tr.gcd == math.gcd(p, q)
    for (u, v), s, r in zip(tr.states, tr.quotients, tr.remainders):
        assert u == v * s + r and 0 <= r < v


def test_euclid_rejects_bad_order():
    with pytest.raises(DomainError):
        omega.euclid_trace(5, 3)


# -- Fibonacci words -------------------------------------------------------------


@pytest.mark.parametrize("k, word", [(0, "0"), (1, "01"), (2, "010"), (3, "01001")])
def test_fib_word_small(k, word):
    assert omega.fib_word(k) == word


def test_fib_word_five_follows_rewriting_rule():
    # substitution 0->01, 1->0 applied five times to "0"
    w = "0"
    for _ in range(5):
        w = "".join("01" if c == "0" else "0" for c in w)
    assert omega.fib_word(5) == w == "0100101001001"


def test_fib_word_lengths_and_prefixes():
    for k in range(0, 20):
        assert len(omega.fib_word(k)) == fib_oracle(k + 2)
        if k >= 1:
            assert omega.fib_word(k + 1).startswith(omega.fib_word(k))


def test_fib_word_report_notes_length_34():
    rep = omega.fib_word_report(7)
    assert rep["length"] == 34
    assert "k=7" in rep["notes"][0]


# -- almost periodicity ----------------------------------------------------------


def test_exact_period_found():
    rep = omega.almost_period_search((1, 1), 1e-6, omega.Grid(0, 10, 0.01))
    assert rep.found
    assert rep.shift == pytest.approx(2 * math.pi, abs=1e-6)


def test_quasi_periodic_found_at_coarse_epsilon():
    rep = omega.almost_period_search((1, TAU), 0.5, omega.Grid(0, 200, 0.01))
    assert rep.found and rep.shift > 0 and rep.max_deviation < 0.5


def test_quasi_periodic_not_found_at_tiny_epsilon():
    rep = omega.almost_period_search((1, TAU), 1e-12, omega.Grid(0, 200, 0.01))
    assert not rep.found


def test_reported_deviation_matches_direct_evaluation():
    rep = omega.almost_period_search((1, TAU), 0.5, omega.Grid(0, 200, 0.01))
    xs = omega.Grid(0, 99.9, 0.1).points()
    f = lambda x: np.sin(x) + np.sin(TAU * x)  # noqa: E731
    direct = np.max(np.abs(f(xs + rep.shift) - f(xs)))
    assert direct == pytest.approx(rep.max_deviation, abs=1e-9)


def test_empty_grid_rejected():
    with pytest.raises(DomainError):
        omega.almost_period_search((1, TAU), 0.5, omega.Grid(5, 5, 0.1))


# -- cellular automaton -----------------------------------------------------------


def rule110_oracle(left, centre, right):
    return (110 >> (left * 4 + centre * 2 + right)) & 1


def test_rule_table_from_wolfram_code():
    table = omega.rule_table(110)
    assert len(table) == 8
    for nb in itertools.product((0, 1), repeat=3):
        assert table[nb] == rule110_oracle(*nb)
    assert table[(0, 0, 1)] == 1


def brute_force_matches(arith):
    """Oracle: every 0/1 3x3 matrix against every 3-cell row, zero boundary."""
    rows = list(itertools.product((0, 1), repeat=3))
    targets = []
    for r in rows:
        padded = (0, *r, 0)
        targets.append(tuple(rule110_oracle(*padded[i:i + 3]) for i in range(3)))
    hits = []
    for bits in itertools.product((0, 1), repeat=9):
        m = np.array(bits).reshape(3, 3)
        out = [tuple(m @ np.array(r)) for r in rows]
        if arith == "mod2":
            out = [tuple(x % 2 for x in o) for o in out]
        if out == targets:
            hits.append(m)
    return hits


@pytest.mark.parametrize("arith", ["integer", "mod2"])
def test_no_linear_map_reproduces_rule(arith):
    rep = omega.ca_linear_impossibility(arith)
    assert rep.candidates_checked == 512
    assert rep.matches == [] == brute_force_matches(arith)
    assert len(rep.counterexamples) == 512


def test_prose_candidate_overflows_on_110():
    failures = omega.evaluate_candidate(omega.PROSE_CANDIDATE)
    by_input = {tuple(f["input"]): f for f in failures}
    assert 2 in by_input[(1, 1, 0)]["output"]
    assert 2 in by_input[(0, 1, 1)]["output"]
    for ok in [(0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]:
        assert ok not in by_input


def test_rule_is_not_linear_over_gf2():
    t = omega.rule_table(110)
    # f(001) xor f(010) = 0 while f(011) = 1 for the row map's centre cell
    row = lambda r: omega.ca_step(r, t)  # noqa: E731
    a, b, ab = row((0, 0, 1)), row((0, 1, 0)), row((0, 1, 1))
    assert tuple(x ^ y for x, y in zip(a, b)) != ab
