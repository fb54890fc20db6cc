"""The machine: joint spectra, conditional gates and hypothesis execution.

Register slots are numbered from 1. Slots ``1..M`` are the standard basis
states of the bound system; combined states follow in creation order at
``M+1, M+2, ...``. A joint spectrum holds two counts per slot: entry
``2j-2`` counts the slot's state, entry ``2j-1`` its orthocomplement.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import linalg
from .errors import DimensionError, DomainError, EncodingError, ValidationError
from .logic import CombinedState, CompositeSystem, SCHEMA

DEFAULT_SHOTS = 1024
DEFAULT_EPSILON = 1e-9
DEFAULT_MAX_STEPS = 100
MODES = ("exact", "sampled")


# -- spectra -------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    entries: tuple[int, ...]
    shots: int
    mode: str = "exact"
    seed: int | None = None

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if self.shots < 1:
            raise DomainError("shots must be >= 1")
        if len(entries) % 2 or not entries:
            raise ValidationError("a spectrum holds an even, nonzero number of entries")
        if any(e < 0 for e in entries):
            raise ValidationError("frequencies must be nonnegative")
        for j in range(0, len(entries), 2):
            if entries[j] + entries[j + 1] != self.shots:
                raise ValidationError(f"slot {j // 2 + 1}: state and complement do not sum to shots")

    @property
    def slots(self) -> int:
        return len(self.entries) // 2

    def vector(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"entries": list(self.entries), "shots": self.shots, "mode": self.mode,
                "seed": self.seed}


def selector_matrix(slots: int, polarity: bool = True) -> np.ndarray:
    """The ``slots x 2 slots`` 0/1 matrix picking true (or false) counts."""
    v = np.zeros((slots, 2 * slots), dtype=np.int64)
    offset = 0 if polarity else 1
    v[np.arange(slots), 2 * np.arange(slots) + offset] = 1
    return v


def select_true(phi: Spectrum) -> np.ndarray:
    return selector_matrix(phi.slots, True) @ phi.vector()


def select_false(phi: Spectrum) -> np.ndarray:
    return selector_matrix(phi.slots, False) @ phi.vector()


def select(phi: Spectrum, polarity: bool) -> np.ndarray:
    return select_true(phi) if polarity else select_false(phi)


# -- machine state -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MachineState:
    """Density over the standard basis plus truth probabilities of combined slots.

    Combined slots live in their own memory: their probabilities do not
    follow from, and do not constrain, the standard-state statistics.
    """

    system: CompositeSystem
    rho: np.ndarray
    combined: tuple[float, ...] = ()

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        n = self.system.total_dim
        if rho.shape != (n, n):
            raise DimensionError(f"density must be {n}x{n}")
        tr = float(np.trace(rho).real)
        if abs(tr - 1.0) > 1e-9:
            raise DomainError(f"density trace is {tr}, not 1")
        for p in self.combined:
            if not -1e-12 <= p <= 1 + 1e-12:
                raise DomainError("combined slot probabilities must lie in [0, 1]")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "combined", tuple(float(min(1.0, max(0.0, p))) for p in self.combined))

    @classmethod
    def pure(cls, system: CompositeSystem, vector, combined: Sequence[float] = ()) -> "MachineState":
        v = linalg.as_vector(vector)
        if v.size != system.total_dim:
            raise DimensionError("state vector does not match the system")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"state is not normalised (norm {norm})")
        return cls(system, np.outer(v, v.conj()), tuple(combined))

    @classmethod
    def basis(cls, system: CompositeSystem, m: int, combined: Sequence[float] = ()) -> "MachineState":
        return cls.pure(system, system.basis(m), combined)

    @classmethod
    def from_weights(cls, system: CompositeSystem, weights, combined: Sequence[float] = ()) -> "MachineState":
        w = np.asarray(weights, dtype=float)
        if w.shape != (system.total_dim,) or np.any(w < -1e-12):
            raise DomainError("weights must be a nonnegative vector over the standard basis")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise DomainError("weights must sum to 1")
        return cls(system, np.diag(np.clip(w, 0, None)).astype(complex), tuple(combined))

    def probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.rho)), 0.0, None)

    def with_combined(self, slot: int, value: float) -> "MachineState":
        comb = list(self.combined)
        comb[slot] = value
        return MachineState(self.system, self.rho, tuple(comb))


def _project_combined(system: CompositeSystem, combined: Sequence[CombinedState], rho) -> tuple[float, ...]:
    return tuple(float(np.real(np.vdot(c.vector, rho @ c.vector))) for c in combined)


def initial_state(system: CompositeSystem, vector, combined: Sequence[CombinedState] = (),
                  forced: dict[int, float] | None = None) -> MachineState:
    """Pure state whose combined slots default to their overlap with ``vector``."""
    v = linalg.as_vector(vector)
    probs = list(_project_combined(system, combined, np.outer(v, v.conj())))
    for slot, value in (forced or {}).items():
        probs[slot] = value
    return MachineState.pure(system, v, probs)


def _round_counts(shots: int, probs: np.ndarray) -> np.ndarray:
    # np.rint rounds half to even
    return np.rint(shots * np.clip(probs, 0.0, 1.0)).astype(np.int64)


def measure_spectrum(state, shots: int = DEFAULT_SHOTS, mode: str = "exact", *,
                     seed: int | None = None, rng: np.random.Generator | None = None) -> Spectrum:
    """Frequencies of each slot's state and complement over ``shots`` measurements.

    ``state`` is a ``MachineState`` or a normalised amplitude vector. In
    sampled mode standard outcomes are one multinomial draw and each
    combined slot an independent binomial draw.
    """
    if shots < 1:
        raise DomainError("shots must be >= 1")
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    if isinstance(state, MachineState):
        probs = state.probabilities()
        comb = np.array(state.combined, dtype=float)
    else:
        v = linalg.as_vector(state)
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"state is not normalised (norm {norm})")
        probs = np.abs(v) ** 2
        comb = np.zeros(0)
    total = probs.sum()
    if total <= 0:
        raise DomainError("state has no probability mass")
    probs = probs / total

    if mode == "exact":
        true_std = _round_counts(shots, probs)
        true_comb = _round_counts(shots, comb)
    else:
        if rng is None:
            rng = np.random.default_rng(seed)
        true_std = rng.multinomial(shots, probs).astype(np.int64)
        true_comb = np.array([rng.binomial(shots, p) for p in comb], dtype=np.int64)
    trues = np.concatenate([true_std, true_comb])
    entries = np.empty(2 * trues.size, dtype=np.int64)
    entries[0::2] = trues
    entries[1::2] = shots - trues
    return Spectrum(tuple(entries.tolist()), shots, mode, seed if mode == "sampled" else None)


def spectrum_weights(phi: Spectrum, standard_slots: int) -> np.ndarray | None:
    counts = select_true(phi)[:standard_slots].astype(float)
    total = counts.sum()
    if total <= 0:
        return None
    return counts / total


# -- conditional gates ------------------------------------------------------------


def truth(f) -> bool:
    return bool(f >= 1)


def _check_slot(x: int, n: int) -> None:
    if not 1 <= x <= n:
        raise ValidationError(f"source slot {x} outside 1..{n}")


def if_gate(x: int, y: Sequence[int], phi_prime) -> np.ndarray:
    """Pass ``phi_prime`` through on targets ``y`` when source slot ``x`` is true."""
    phi_prime = np.asarray(phi_prime)
    y = np.asarray(y, dtype=np.int64)
    if y.shape != phi_prime.shape:
        raise DimensionError("target bits and selected spectrum differ in length")
    _check_slot(x, phi_prime.size)
    if not truth(phi_prime[x - 1]):
        return np.zeros_like(phi_prime)
    return np.where(y == 1, phi_prime, 0)


def if_matrix(x: int, y: Sequence[int], phi_prime) -> np.ndarray:
    """Kronecker-delta gate matrix: entry ``(i, i)`` is 1 iff ``phi'_x * y_i == 1``."""
    phi_prime = np.asarray(phi_prime)
    _check_slot(x, phi_prime.size)
    y = np.asarray(y, dtype=np.int64)
    return np.diag((phi_prime[x - 1] * y == 1).astype(np.int64))


def direct_sum_gates(gates: Sequence) -> np.ndarray:
    if not gates:
        raise ValidationError("at least one gate required")
    out = np.asarray(gates[0])
    for g in gates[1:]:
        out = linalg.direct_sum(out, np.asarray(g))
    return out


def or_combine(gates: Sequence) -> np.ndarray:
    """Direct sum of the gate outputs, folded back blockwise by maximum."""
    if not gates:
        raise ValidationError("at least one gate required")
    n = len(gates[0])
    if any(len(g) != n for g in gates):
        raise DimensionError("gates differ in length")
    return direct_sum_gates(gates).reshape(len(gates), n).max(axis=0)


def and_combine(gates: Sequence) -> np.ndarray:
    if not gates:
        raise ValidationError("at least one gate required")
    out = np.asarray(gates[0])
    for g in gates[1:]:
        out = linalg.hadamard(out, np.asarray(g))
    return out


# gate expressions


@dataclass(frozen=True)
class Atom:
    slot: int
    polarity: bool = True


@dataclass(frozen=True)
class AnyOf:
    terms: tuple


@dataclass(frozen=True)
class AllOf:
    terms: tuple


@dataclass(frozen=True)
class Not:
    term: object


GateExpr = Union[Atom, AnyOf, AllOf, Not]


def push_not(expr: GateExpr, negate: bool = False) -> GateExpr:
    """Negation normal form: ``Not`` only survives as atom polarity."""
    if isinstance(expr, Atom):
        return Atom(expr.slot, expr.polarity != negate)
    if isinstance(expr, Not):
        return push_not(expr.term, not negate)
    if isinstance(expr, AnyOf):
        terms = tuple(push_not(t, negate) for t in expr.terms)
        return AllOf(terms) if negate else AnyOf(terms)
    if isinstance(expr, AllOf):
        terms = tuple(push_not(t, negate) for t in expr.terms)
        return AnyOf(terms) if negate else AllOf(terms)
    raise TypeError(f"not a gate expression: {expr!r}")


def expr_slots(expr: GateExpr) -> set[int]:
    if isinstance(expr, Atom):
        return {expr.slot}
    if isinstance(expr, Not):
        return expr_slots(expr.term)
    return set().union(*(expr_slots(t) for t in expr.terms))


def _fold(expr: GateExpr, atom: Callable[[Atom], np.ndarray]) -> np.ndarray:
    if isinstance(expr, Atom):
        return atom(expr)
    if isinstance(expr, AnyOf):
        return or_combine([_fold(t, atom) for t in expr.terms])
    if isinstance(expr, AllOf):
        return and_combine([_fold(t, atom) for t in expr.terms])
    raise TypeError(f"unexpected node {expr!r}")


def evaluate_gate(expr: GateExpr, phi: Spectrum, y: Sequence[int]) -> np.ndarray:
    """Frequency-level output of a gate expression on targets ``y``."""
    t, f = select_true(phi), select_false(phi)
    return _fold(push_not(expr), lambda a: if_gate(a.slot, y, t if a.polarity else f))


def holds(expr: GateExpr, phi: Spectrum) -> bool:
    """Truth of a condition.

    Each atom is gated on the 0/1 indicator of its own source, broadcast
    over every target, so the sum and Hadamard folds act as exact OR and
    AND even when atoms of opposite polarity are mixed.
    """
    t, f = select_true(phi), select_false(phi)
    n = phi.slots
    ones = np.ones(n, dtype=np.int64)

    def atom(a: Atom) -> np.ndarray:
        sel = t if a.polarity else f
        return if_gate(a.slot, ones, np.full(n, int(truth(sel[a.slot - 1])), dtype=np.int64))

    return bool(_fold(push_not(expr), atom).any())


# -- programs ------------------------------------------------------------------------


@dataclass(frozen=True)
class SetState:
    index: int


@dataclass(frozen=True)
class Swap:
    subsystem: int
    local_state: int


@dataclass(frozen=True, eq=False)
class Apply:
    matrix: np.ndarray
    name: str = "op"


@dataclass(frozen=True)
class SetCombined:
    slot: int
    value: bool = True


@dataclass(frozen=True)
class Print:
    text: str


Action = Union[SetState, Swap, Apply, SetCombined, Print]


@dataclass(frozen=True)
class Branch:
    condition: GateExpr
    actions: tuple


@dataclass(frozen=True)
class Rule:
    name: str
    branches: tuple

    @classmethod
    def simple(cls, name: str, condition: GateExpr, *actions: Action) -> "Rule":
        return cls(name, (Branch(condition, tuple(actions)),))


def swap_permutation(system: CompositeSystem, subsystem: int, local_state: int) -> np.ndarray:
    """Permutation exchanging ``local_state`` with its pair partner ``local_state ^ 1``."""
    partner = local_state ^ 1
    n = system.total_dim
    perm = np.zeros((n, n))
    for m in range(1, n + 1):
        states = list(system.local_states(m))
        if states[subsystem] in (local_state, partner):
            states[subsystem] = partner if states[subsystem] == local_state else local_state
        perm[system.index_of(states) - 1, m - 1] = 1
    return perm


@dataclass(frozen=True, eq=False)
class HypothesisProgram:
    """Ordered rules bound to a system and its combined states."""

    system: CompositeSystem
    rules: tuple = ()
    combined: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "combined", tuple(self.combined))
        n_std = self.system.total_dim
        for rule in self.rules:
            for branch in rule.branches:
                for s in expr_slots(branch.condition):
                    _check_slot(s, self.slots)
                for act in branch.actions:
                    self._validate_action(act, n_std)

    def _validate_action(self, act, n_std: int) -> None:
        if isinstance(act, SetState):
            if not 1 <= act.index <= n_std:
                raise ValidationError(f"set target {act.index} outside 1..{n_std}")
        elif isinstance(act, Swap):
            dims = self.system.subsystem_dims
            if not 0 <= act.subsystem < len(dims) or not 0 <= act.local_state < dims[act.subsystem]:
                raise ValidationError("swap target outside the system")
        elif isinstance(act, Apply):
            m = np.asarray(act.matrix)
            if m.shape != (n_std, n_std):
                raise ValidationError(f"operator {act.name} must be {n_std}x{n_std}")
            if np.linalg.cond(m) > 1e12:
                raise ValidationError(f"operator {act.name} is not invertible")
        elif isinstance(act, SetCombined):
            if not 0 <= act.slot < len(self.combined):
                raise ValidationError(f"combined slot {act.slot} does not exist")
        elif not isinstance(act, Print):
            raise ValidationError(f"unknown action {act!r}")

    @property
    def slots(self) -> int:
        return self.system.total_dim + len(self.combined)

    def describe(self) -> dict:
        def expr(e):
            if isinstance(e, Atom):
                return {"atom": e.slot, "polarity": e.polarity}
            if isinstance(e, Not):
                return {"not": expr(e.term)}
            return {type(e).__name__: [expr(t) for t in e.terms]}

        def action(a):
            if isinstance(a, Apply):
                return {"apply": a.name, "matrix": np.round(np.asarray(a.matrix, dtype=complex), 12)
                        .view(float).tolist()}
            return {type(a).__name__: a.__dict__}

        return {
            "system": self.system.to_dict(),
            "combined": [c.to_dict() for c in self.combined],
            "rules": [{"name": r.name,
                       "branches": [{"if": expr(b.condition), "do": [action(a) for a in b.actions]}
                                    for b in r.branches]} for r in self.rules],
        }

    def digest(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def target_bits(self, actions: Sequence) -> tuple[int, ...]:
        n_std = self.system.total_dim
        bits = [0] * self.slots
        for act in actions:
            if isinstance(act, SetState):
                bits[act.index - 1] = 1
            elif isinstance(act, Swap):
                pair = (act.local_state, act.local_state ^ 1)
                for m in range(1, n_std + 1):
                    if self.system.local_states(m)[act.subsystem] in pair:
                        bits[m - 1] = 1
            elif isinstance(act, Apply):
                bits[:n_std] = [1] * n_std
            elif isinstance(act, SetCombined):
                bits[n_std + act.slot] = 1
        return tuple(bits)


@dataclass(frozen=True)
class Register:
    instruction: str
    source: tuple[int, ...]
    target: tuple[int, ...]
    spectrum_ref: tuple[int, int]
    index: int

    def to_dict(self) -> dict:
        return {"instruction": self.instruction, "source": list(self.source),
                "target": list(self.target), "spectrum_ref": list(self.spectrum_ref),
                "index": self.index}


class MemoryStore:
    """Append-only map from ``(t, k)`` to the spectrum stored at that step."""

    def __init__(self):
        self._data: OrderedDict[tuple[int, int], Spectrum] = OrderedDict()

    def put(self, t: int, k: int, phi: Spectrum) -> None:
        if (t, k) in self._data:
            raise ValidationError(f"memory slot {(t, k)} already written")
        self._data[(t, k)] = phi

    def get(self, t: int, k: int) -> Spectrum:
        return self._data[(t, k)]

    def keys(self) -> list[tuple[int, int]]:
        return list(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key) -> bool:
        return key in self._data


def apply_action(program: HypothesisProgram, state: MachineState, act) -> MachineState:
    system = program.system
    if isinstance(act, SetState):
        return MachineState.basis(system, act.index, state.combined)
    if isinstance(act, Swap):
        p = swap_permutation(system, act.subsystem, act.local_state)
        return MachineState(system, p @ state.rho @ p.T, state.combined)
    if isinstance(act, Apply):
        a = np.asarray(act.matrix, dtype=complex)
        rho = a @ state.rho @ a.conj().T
        return MachineState(system, rho / np.trace(rho).real, state.combined)
    if isinstance(act, SetCombined):
        return state.with_combined(act.slot, 1.0 if act.value else 0.0)
    return state


@dataclass
class StepResult:
    state: MachineState
    spectrum: Spectrum
    fired: list = field(default_factory=list)
    prints: list = field(default_factory=list)
    registers: list = field(default_factory=list)


def reprepare(program: HypothesisProgram, state: MachineState, phi: Spectrum) -> MachineState:
    """Mixed state rebuilt from the measured frequencies."""
    n_std = program.system.total_dim
    weights = spectrum_weights(phi, n_std)
    if weights is None:
        weights = state.probabilities() / state.probabilities().sum()
    comb = select_true(phi)[n_std:] / phi.shots
    return MachineState.from_weights(program.system, weights, tuple(comb.tolist()))


def step(program: HypothesisProgram, state: MachineState, t: int, store: MemoryStore,
         shots: int = DEFAULT_SHOTS, mode: str = "exact",
         rng: np.random.Generator | None = None) -> StepResult:
    """One machine step: measure, store, gate every rule, act on the re-prepared state."""
    if len(state.combined) != len(program.combined):
        raise ValidationError("state and program disagree on combined slots")
    phi = measure_spectrum(state, shots, mode, rng=rng)
    keys = range(1, len(program.rules) + 1) if program.rules else (0,)
    for k in keys:
        store.put(t, k, phi)
    if not program.rules:
        return StepResult(state, phi)

    nxt = reprepare(program, state, phi)
    result = StepResult(nxt, phi)
    for k, rule in enumerate(program.rules, start=1):
        for b, branch in enumerate(rule.branches, start=1):
            if not holds(branch.condition, phi):
                continue
            result.fired.append({"t": t, "rule": rule.name, "branch": b})
            source = [0] * program.slots
            for s in expr_slots(branch.condition):
                source[s - 1] = 1
            result.registers.append(Register(f"{rule.name}/{b}", tuple(source),
                                             program.target_bits(branch.actions), (t, k), k))
            for act in branch.actions:
                if isinstance(act, Print):
                    result.prints.append({"t": t, "rule": rule.name, "branch": b, "text": act.text})
                nxt = apply_action(program, nxt, act)
            break
    result.state = nxt
    return result


def iterate(program: HypothesisProgram, state: MachineState, k: int, shots: int = DEFAULT_SHOTS,
            mode: str = "exact", seed: int = 0) -> MachineState:
    """``k``-fold composition of ``step``."""
    rng = np.random.default_rng(seed)
    store = MemoryStore()
    for t in range(1, k + 1):
        state = step(program, state, t, store, shots, mode, rng).state
    return state


def primitive_recursion(base: Callable, g: Callable, phi, k: int):
    """``h(phi, 0) = base(phi)``; ``h(phi, j+1) = g(phi, j, h(phi, j))``."""
    h = base(phi)
    for j in range(k):
        h = g(phi, j, h)
    return h


# -- convergence -----------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    entropy_trace: list
    epsilon: float
    depth: int | None
    decided_class: str | None
    converged: bool
    shots: int
    seed: int
    mode: str
    max_steps: int
    spectra: list = field(default_factory=list)
    fired: list = field(default_factory=list)
    prints: list = field(default_factory=list)
    registers: list = field(default_factory=list)
    digest: str = ""
    system: dict = field(default_factory=dict)
    final_state: MachineState | None = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "run",
            "system": self.system,
            "program_digest": self.digest,
            "seed": self.seed,
            "shots": self.shots,
            "mode": self.mode,
            "epsilon": self.epsilon,
            "max_steps": self.max_steps,
            "steps": [{"t": t, "spectrum": list(phi.entries), "entropy": s}
                      for t, (phi, s) in enumerate(zip(self.spectra, self.entropy_trace), start=1)],
            "entropy_trace": list(self.entropy_trace),
            "entropy_unit": "bits",
            "T": self.depth,
            "converged": self.converged,
            "decided_class": self.decided_class,
            "branches_fired": list(self.fired),
            "prints": list(self.prints),
            "registers": [r.to_dict() for r in self.registers],
        }


def _step_entropy(program: HypothesisProgram, state: MachineState, phi: Spectrum) -> tuple[float, np.ndarray]:
    weights = spectrum_weights(phi, program.system.total_dim)
    if weights is None:
        p = state.probabilities()
        weights = p / p.sum()
    return linalg.von_neumann_entropy(weights), weights


def run_until_converged(program: HypothesisProgram, state: MachineState,
                        epsilon: float = DEFAULT_EPSILON, max_steps: int = DEFAULT_MAX_STEPS,
                        shots: int = DEFAULT_SHOTS, mode: str = "exact",
                        seed: int = 0) -> ConvergenceReport:
    """Step until the spectrum entropy drops below ``epsilon`` bits."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    if max_steps < 1:
        raise DomainError("max_steps must be >= 1")
    rng = np.random.default_rng(seed)
    store = MemoryStore()
    report = ConvergenceReport([], epsilon, None, None, False, shots, seed, mode, max_steps,
                               digest=program.digest(), system=program.system.to_dict())
    for t in range(1, max_steps + 1):
        before = state
        res = step(program, state, t, store, shots, mode, rng)
        s, weights = _step_entropy(program, before, res.spectrum)
        report.entropy_trace.append(s)
        report.spectra.append(res.spectrum)
        report.fired.extend(res.fired)
        report.prints.extend(res.prints)
        report.registers.extend(res.registers)
        state = res.state
        if s < epsilon:
            report.converged = True
            report.depth = t
            report.decided_class = program.system.basis_label(int(np.argmax(weights)) + 1)
            break
    report.final_state = state
    return report


# -- hypothesis search ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Match:
    operator: np.ndarray
    exact: bool

    def to_dict(self) -> dict:
        op = self.operator
        return {"operator": op.tolist(), "exact": self.exact}


def binary_family(n: int) -> list[np.ndarray]:
    """Every 0/1 ``n x n`` matrix, ordered by its row-major bit string."""
    return [np.array(bits, dtype=np.int64).reshape(n, n)
            for bits in itertools.product((0, 1), repeat=n * n)]


def _family(family) -> list[np.ndarray]:
    if isinstance(family, str):
        if family == "binary2":
            return binary_family(2)
        if family == "binary3":
            return binary_family(3)
        raise ValidationError(f"unknown operator family {family!r}")
    return [np.asarray(m) for m in family]


def trajectory_pairs(trajectory) -> list[tuple[np.ndarray, np.ndarray]]:
    """Consecutive pairs of one trajectory, or of several segments."""
    traj = list(trajectory)
    if traj and traj[0] is not None and len(traj[0]) and isinstance(traj[0][0], (list, tuple, np.ndarray)):
        segments = [list(seg) for seg in traj]
    else:
        segments = [traj]
    pairs = []
    dim = None
    for seg in segments:
        if len(seg) < 2:
            raise ValidationError("a trajectory needs at least two vectors")
        vecs = [np.asarray(v) for v in seg]
        for v in vecs:
            if v.ndim != 1 or v.size == 0:
                raise ValidationError("trajectory entries must be non-empty vectors")
            if dim is None:
                dim = v.size
            elif v.size != dim:
                raise DimensionError("trajectory vectors differ in dimension")
        pairs.extend(zip(vecs[:-1], vecs[1:]))
    return pairs


def _scan(ops: Sequence[np.ndarray], pairs, atol: float) -> list[Match]:
    out = []
    for op in ops:
        ok_exact, ok_close = True, True
        for u, v in pairs:
            w = op @ u
            if ok_exact and not np.array_equal(w, v):
                ok_exact = False
            if not np.allclose(w, v, atol=atol, rtol=0):
                ok_close = False
                break
        if ok_close:
            out.append(Match(op, ok_exact))
    return out


def hypothesis_search(trajectory, family="binary2", workers: int = 1,
                      atol: float = 1e-9) -> list[Match]:
    """Operators of ``family`` mapping every trajectory vector to its successor.

    Matches keep family order whatever the worker count. ``exact`` is set
    when the match holds in exact arithmetic rather than within ``atol``.
    """
    pairs = trajectory_pairs(trajectory)
    ops = _family(family)
    dim = pairs[0][0].size
    for op in ops:
        if op.shape != (dim, dim):
            raise DimensionError(f"operator shape {op.shape} does not fit dimension {dim}")
    if workers <= 1 or len(ops) < 2:
        return _scan(ops, pairs, atol)
    size = -(-len(ops) // workers)
    chunks = [ops[i:i + size] for i in range(0, len(ops), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _scan(c, pairs, atol), chunks))
    return [m for part in parts for m in part]


def transport_nat_function(f, n: int) -> int:
    """Conjugate an operator into a map on naturals via basis encoding.

    ``n`` is encoded as the ``n``-th standard basis vector (1-based); the
    image must again be a standard basis vector.
    """
    f = linalg.as_square(np.asarray(f))
    dim = f.shape[0]
    if not 1 <= n <= dim:
        raise DomainError(f"n={n} outside the encodable range 1..{dim}")
    out = f @ linalg.basis_vector(dim, n - 1)
    hits = np.flatnonzero(np.abs(out) > 1e-9)
    if hits.size != 1 or abs(out[hits[0]] - 1) > 1e-9:
        raise EncodingError("operator output is not a standard basis vector")
    return int(hits[0]) + 1


def cyclic_shift(dim: int) -> np.ndarray:
    return np.roll(np.eye(dim), 1, axis=0)


def permutation_matrix(images: Iterable[int]) -> np.ndarray:
    """Matrix sending basis ``j`` to basis ``images[j-1]`` (1-based)."""
    images = list(images)
    dim = len(images)
    if sorted(images) != list(range(1, dim + 1)):
        raise ValidationError("images must be a permutation of 1..dim")
    p = np.zeros((dim, dim))
    for j, i in enumerate(images):
        p[i - 1, j] = 1
    return p
