"""Analysis of the quasi-periodic operator class.

An integer 2x2 matrix belongs to the class when its eigenvalues are
irrational, i.e. its discriminant ``(a-d)^2 + 4bc`` is positive and not a
perfect square. The remaining helpers probe Fibonacci growth, the Euclid
worst case, Fibonacci words, almost-periodicity and the cellular-automaton
counterexample against linear one-step maps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CapacityError, DomainError

FIB_MAX_N = 90
GAP_MAX_N = 89
WORD_MAX_K = 30
TAU = (1 + math.sqrt(5)) / 2
_DECIMAL_PREC = 120


@dataclass(frozen=True)
class IntMatrix2:
    a: int
    b: int
    c: int
    d: int

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix2":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d))

    @property
    def rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def transpose(self) -> "IntMatrix2":
        return IntMatrix2(self.a, self.c, self.b, self.d)

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.int64)

    @property
    def discriminant(self) -> int:
        return (self.a - self.d) ** 2 + 4 * self.b * self.c


@dataclass(frozen=True)
class OmegaVerdict:
    matrix: IntMatrix2
    discriminant: int
    in_omega: bool
    eigenvalues: tuple[complex, complex]

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.rows,
            "discriminant": self.discriminant,
            "in_omega": self.in_omega,
            "eigenvalues": [_num(z) for z in self.eigenvalues],
        }


def _num(z: complex):
    z = complex(z)
    if z.imag == 0:
        return z.real
    return {"re": z.real, "im": z.imag}


def is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def classify(m: IntMatrix2) -> OmegaVerdict:
    disc = m.discriminant
    tr = m.a + m.d
    if disc >= 0:
        r = math.sqrt(disc)
        eig = (complex((tr + r) / 2), complex((tr - r) / 2))
    else:
        r = math.sqrt(-disc)
        eig = (complex(tr / 2, r / 2), complex(tr / 2, -r / 2))
    return OmegaVerdict(m, disc, disc > 0 and not is_perfect_square(disc), eig)


def binary_2x2() -> list[IntMatrix2]:
    """All sixteen 0/1 matrices, ordered by the bits (a, b, c, d)."""
    return [IntMatrix2(*bits) for bits in itertools.product((0, 1), repeat=4)]


def classify_binary_2x2() -> list[OmegaVerdict]:
    return [classify(m) for m in binary_2x2()]


FIBONACCI = IntMatrix2(1, 1, 1, 0)


def classification_report() -> dict:
    verdicts = classify_binary_2x2()
    members = [v.matrix.rows for v in verdicts if v.in_omega]
    notes = []
    if members != [FIBONACCI.rows]:
        notes.append(
            "exhaustive discriminant test admits more than the Fibonacci matrix: "
            f"{members}; swapping both basis states conjugates the Fibonacci "
            "matrix into the second member, so uniqueness only holds up to "
            "relabelling"
        )
    return {
        "operation": "classify",
        "count": len(verdicts),
        "verdicts": [v.to_dict() for v in verdicts],
        "in_omega": members,
        "notes": notes,
    }


# -- Fibonacci growth --------------------------------------------------------


def _check_range(name: str, n: int, lo: int, hi: int) -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise DomainError(f"{name} must be an integer")
    if n < lo:
        raise DomainError(f"{name} must be >= {lo}")
    if n > hi:
        raise CapacityError(f"{name}={n} exceeds the exact range (max {hi})")


def fib_closed_form(n: int) -> int:
    """Count produced by ``n`` applications of the Fibonacci rule.

    Evaluates ``(l1^(n+1) - l2^(n+1)) / (l1 - l2)`` at 120 significant
    digits and rounds, so the result is exact over the whole range.
    """
    _check_range("n", n, 0, FIB_MAX_N)
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_PREC
        root5 = Decimal(5).sqrt()
        l1 = (1 + root5) / 2
        l2 = (1 - root5) / 2
        value = (l1 ** (n + 1) - l2 ** (n + 1)) / root5
        return int(value.to_integral_value())


def fib_iterate(n: int) -> tuple[int, int]:
    """``F^n u0`` with ``u0 = (1, 0)`` in exact integer arithmetic."""
    if n < 0:
        raise DomainError("n must be >= 0")
    u = (1, 0)
    for _ in range(n):
        u = (u[0] + u[1], u[0])
    return u


def golden_ratio_gap(n: int) -> float:
    """Distance between the growth ratio at step ``n`` and the golden ratio."""
    _check_range("n", n, 1, GAP_MAX_N)
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_PREC
        tau = (1 + Decimal(5).sqrt()) / 2
        ratio = Decimal(fib_closed_form(n + 1)) / Decimal(fib_closed_form(n))
        return float(abs(ratio - tau))


# -- Euclid ------------------------------------------------------------------


@dataclass(frozen=True)
class EuclidTrace:
    quotients: tuple[int, ...]
    remainders: tuple[int, ...]
    states: tuple[tuple[int, int], ...]
    gcd: int

    @property
    def steps(self) -> int:
        return len(self.quotients)

    def to_dict(self) -> dict:
        return {
            "quotients": list(self.quotients),
            "remainders": list(self.remainders),
            "states": [list(s) for s in self.states],
            "gcd": self.gcd,
            "steps": self.steps,
        }


def euclid_trace(p: int, q: int) -> EuclidTrace:
    """Division chain ``u = v*s + r`` starting from ``u=q, v=p``."""
    if p < 1 or q < p:
        raise DomainError("euclid_trace needs q >= p >= 1")
    u, v = q, p
    quotients, remainders, states = [], [], []
    while True:
        s, r = divmod(u, v)
        states.append((u, v))
        quotients.append(s)
        remainders.append(r)
        if r == 0:
            break
        u, v = v, r
    return EuclidTrace(tuple(quotients), tuple(remainders), tuple(states), v)


# -- Fibonacci words ---------------------------------------------------------


def fib_word(k: int) -> str:
    """Apply ``0 -> 01, 1 -> 0`` ``k`` times to the seed ``"0"``."""
    _check_range("k", k, 0, WORD_MAX_K)
    word = "0"
    for _ in range(k):
        word = "".join("01" if ch == "0" else "0" for ch in word)
    return word


def fib_word_report(k: int) -> dict:
    word = fib_word(k)
    # first rewrite count whose word is 34 symbols long
    k34 = next(j for j in range(WORD_MAX_K + 1) if len(fib_word(j)) >= 34)
    return {
        "operation": "word",
        "k": k,
        "word": word,
        "length": len(word),
        "length_convention": "len(word(k)) = F(k+2) with F(1) = F(2) = 1",
        "chance_probability": 2.0 ** -len(word),
        "notes": [
            f"k counts rewritings of the seed '0'; a 34-symbol word needs k={k34}, "
            "not nine rewritings"
        ],
    }


# -- almost periodicity ------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    step: float

    def points(self) -> np.ndarray:
        if self.step <= 0 or self.stop <= self.start:
            raise DomainError("grid needs step > 0 and stop > start")
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "step": self.step}


@dataclass(frozen=True)
class AlmostPeriodReport:
    frequencies: tuple[float, ...]
    epsilon: float
    shift: float
    max_deviation: float
    found: bool
    shift_grid: Grid
    sample_grid: Grid
    min_shift: float

    def to_dict(self) -> dict:
        return {
            "operation": "almost-period",
            "frequencies": list(self.frequencies),
            "epsilon": self.epsilon,
            "shift": self.shift,
            "max_deviation": self.max_deviation,
            "found": self.found,
            "shift_grid": self.shift_grid.to_dict(),
            "sample_grid": self.sample_grid.to_dict(),
            "min_shift": self.min_shift,
        }


def _deviation(freqs: np.ndarray, xs: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """max_x |f(x+t) - f(x)| for each shift t, with f = sum of sin(w x)."""
    out = np.empty(len(shifts))
    base = np.sin(np.outer(xs, freqs)).sum(axis=1)
    chunk = max(1, 2_000_000 // max(1, len(xs)))
    for lo in range(0, len(shifts), chunk):
        t = shifts[lo:lo + chunk]
        moved = np.sin((xs[None, :, None] + t[:, None, None]) * freqs[None, None, :]).sum(axis=2)
        out[lo:lo + chunk] = np.abs(moved - base[None, :]).max(axis=1)
    return out


def almost_period_search(
    frequencies: Iterable[float],
    epsilon: float,
    grid: Grid,
    samples: Grid | None = None,
    min_shift: float | None = None,
) -> AlmostPeriodReport:
    """Look for an epsilon-almost period of ``sum(sin(w x))``.

    Every grid shift is scored by the largest deviation over ``samples``;
    local minima are then refined by a bounded scalar search. The smallest
    refined shift below ``epsilon`` is reported, otherwise the best one.
    Shifts under ``min_shift`` (default half the longest component period)
    are ignored since ``t -> 0`` is always a trivial almost period.
    """
    freqs = np.asarray(list(frequencies), dtype=float)
    if freqs.size == 0 or np.any(freqs <= 0):
        raise DomainError("frequencies must be positive")
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    shifts = grid.points()
    if shifts.size < 1000:
        raise DomainError(f"shift grid has {shifts.size} samples; at least 1000 required")
    samples = samples or Grid(0.0, 99.9, 0.1)
    xs = samples.points()
    if min_shift is None:
        min_shift = math.pi / float(freqs.min())
    shifts = shifts[shifts >= min_shift]
    if shifts.size == 0:
        raise DomainError("no grid shift exceeds the minimum shift")

    dev = _deviation(freqs, xs, shifts)
    interior = np.ones(len(dev), dtype=bool)
    interior[1:] &= dev[1:] <= dev[:-1]
    interior[:-1] &= dev[:-1] <= dev[1:]
    candidates = np.flatnonzero(interior)

    def objective(t: float) -> float:
        return float(_deviation(freqs, xs, np.array([t]))[0])

    best_t, best_dev = float(shifts[int(np.argmin(dev))]), float(dev.min())
    lo_bound = max(min_shift, float(shifts[0]))
    hi_bound = float(shifts[-1])
    for idx in candidates:
        t0 = float(shifts[idx])
        lo = max(lo_bound, t0 - grid.step)
        hi = min(hi_bound, t0 + grid.step)
        t, d = t0, float(dev[idx])
        if hi > lo:
            res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-13, "maxiter": 200})
            if res.fun < d:
                t, d = float(res.x), float(res.fun)
        if d < epsilon:
            return AlmostPeriodReport(tuple(freqs), epsilon, t, d, True, grid, samples, min_shift)
        if d < best_dev:
            best_t, best_dev = t, d
    return AlmostPeriodReport(tuple(freqs), epsilon, best_t, best_dev,
                              best_dev < epsilon, grid, samples, min_shift)


# -- cellular automaton ------------------------------------------------------

NEIGHBOURHOODS = tuple(itertools.product((0, 1), repeat=3))
PROSE_CANDIDATE = ((1, 1, 0), (0, 1, 1), (0, 0, 1))


def rule_table(rule: int = 110) -> dict[tuple[int, int, int], int]:
    """Wolfram-coded local rule: neighbourhood (l, c, r) -> next centre."""
    if not 0 <= rule <= 255:
        raise DomainError("rule number must be in 0..255")
    return {nb: (rule >> (4 * nb[0] + 2 * nb[1] + nb[2])) & 1 for nb in NEIGHBOURHOODS}


def ca_step(row: Sequence[int], table: dict) -> tuple[int, ...]:
    """One synchronous update of a finite row with zero boundary cells."""
    padded = (0, *row, 0)
    return tuple(table[(padded[i - 1], padded[i], padded[i + 1])] for i in range(1, len(row) + 1))


@dataclass
class CAReport:
    rule: int
    arithmetic: str
    rule_table: dict
    candidates_checked: int = 0
    matches: list = field(default_factory=list)
    counterexamples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "operation": "ca",
            "rule": self.rule,
            "arithmetic": self.arithmetic,
            "rule_table": {"".join(map(str, k)): v for k, v in sorted(self.rule_table.items())},
            "candidates_checked": self.candidates_checked,
            "matches": self.matches,
            "counterexamples": self.counterexamples,
        }


def evaluate_candidate(matrix, arith: str = "integer", rule: int = 110) -> list[dict]:
    """Inputs on which ``matrix @ row`` disagrees with one CA step."""
    table = rule_table(rule)
    m = np.asarray(matrix, dtype=np.int64)
    bad = []
    for row in NEIGHBOURHOODS:
        out = m @ np.array(row, dtype=np.int64)
        if arith == "mod2":
            out = out % 2
        expected = ca_step(row, table)
        if tuple(int(v) for v in out) != expected:
            bad.append({"input": list(row), "output": [int(v) for v in out],
                        "expected": list(expected)})
    return bad


def ca_linear_impossibility(arith: str = "integer", rule: int = 110) -> CAReport:
    """Try every 0/1 3x3 matrix as the one-step map of a 3-cell row."""
    if arith not in ("integer", "mod2"):
        raise DomainError("arith must be 'integer' or 'mod2'")
    report = CAReport(rule=rule, arithmetic=arith, rule_table=rule_table(rule))
    for bits in itertools.product((0, 1), repeat=9):
        matrix = [list(bits[0:3]), list(bits[3:6]), list(bits[6:9])]
        report.candidates_checked += 1
        bad = evaluate_candidate(matrix, arith, rule)
        if bad:
            first = bad[0]
            report.counterexamples.append(
                {"matrix": matrix, "input": first["input"], "output": first["output"]}
            )
        else:
            report.matches.append(matrix)
    return report
