"""Composite event-state systems and their subspace logic.

Standard basis states are numbered ``1..M`` (``M`` the product of the
subsystem dimensions) in row-major order: the first subsystem is the most
significant digit, matching ``numpy.kron`` of the subsystem factors.
Propositions are closed subspaces, carried around as orthogonal
projectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import (
    CapacityError,
    DegeneracyError,
    DimensionError,
    DomainError,
    ValidationError,
)

SCHEMA = "beta-machine/1"
PROJ_TOL = 1e-10
EQ_TOL = 1e-9


def nth_prime(m: int) -> int:
    """The ``m``-th prime, 1-based (``nth_prime(1) == 2``)."""
    if m < 1:
        raise DomainError("prime index must be >= 1")
    # p_m < m (ln m + ln ln m) for m >= 6
    limit = 15 if m < 6 else int(m * (math.log(m) + math.log(math.log(m)))) + 1
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(sieve[i * i::i]))
    primes = [i for i, flag in enumerate(sieve) if flag]
    return primes[m - 1]


# -- composite systems --------------------------------------------------------


@dataclass(frozen=True)
class PropositionalElement:
    subsystem: int
    local_state: int
    label: str


@dataclass(frozen=True)
class CompositeSystem:
    subsystem_dims: tuple[int, ...]
    names: tuple[str, ...]
    state_labels: tuple[tuple[str, ...], ...]

    @property
    def total_dim(self) -> int:
        return math.prod(self.subsystem_dims)

    @property
    def elements(self) -> list[PropositionalElement]:
        return [
            PropositionalElement(n, i, f"{self.names[n]}.{self.state_labels[n][i]}")
            for n, dim in enumerate(self.subsystem_dims)
            for i in range(dim)
        ]

    def index_of(self, local_states: Sequence[int]) -> int:
        """Standard basis index (1-based) of a product of local states."""
        if len(local_states) != len(self.subsystem_dims):
            raise DimensionError("one local state per subsystem required")
        idx = 0
        for state, dim in zip(local_states, self.subsystem_dims):
            if not 0 <= state < dim:
                raise ValidationError(f"local state {state} out of range for dimension {dim}")
            idx = idx * dim + state
        return idx + 1

    def local_states(self, m: int) -> tuple[int, ...]:
        if not 1 <= m <= self.total_dim:
            raise ValidationError(f"basis index {m} outside 1..{self.total_dim}")
        rest = m - 1
        out = []
        for dim in reversed(self.subsystem_dims):
            rest, r = divmod(rest, dim)
            out.append(r)
        return tuple(reversed(out))

    def basis_label(self, m: int) -> str:
        states = self.local_states(m)
        parts = [f"{self.names[n]}.{self.state_labels[n][s]}" for n, s in enumerate(states)]
        return parts[0] if len(parts) == 1 else "(" + ", ".join(parts) + ")"

    def basis(self, m: int) -> np.ndarray:
        return linalg.basis_vector(self.total_dim, m - 1)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.subsystem_dims),
            "names": list(self.names),
            "state_labels": [list(s) for s in self.state_labels],
            "total_dim": self.total_dim,
        }


def build_composite(
    dims: Sequence[int],
    names: Sequence[str] | None = None,
    state_labels: Sequence[Sequence[str]] | None = None,
) -> CompositeSystem:
    dims = tuple(dims)
    if not dims:
        raise ValidationError("a composite system needs at least one subsystem")
    for d in dims:
        if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
            raise ValidationError(f"subsystem dimension must be a positive integer, got {d!r}")
        if d % 2:
            raise ValidationError(f"subsystem dimension {d} is odd; each must be 2*l")
    total = math.prod(dims)
    if total > linalg.dim_cap():
        raise CapacityError(f"total dimension {total} exceeds the dimension cap {linalg.dim_cap()}")
    if names is None:
        names = tuple(f"q{n + 1}" for n in range(len(dims)))
    if state_labels is None:
        state_labels = tuple(tuple(str(i) for i in range(d)) for d in dims)
    names = tuple(names)
    state_labels = tuple(tuple(s) for s in state_labels)
    if len(names) != len(dims) or len(state_labels) != len(dims):
        raise ValidationError("names and state labels must match the subsystem count")
    for labels, d in zip(state_labels, dims):
        if len(labels) != d:
            raise ValidationError("state label count must equal the subsystem dimension")
    return CompositeSystem(tuple(int(d) for d in dims), names, state_labels)


def correlation_check(state, threshold: float = 0.99) -> bool:
    """Whether two qubits concentrate on matched pairs (a)+(d) or (b)+(c)."""
    v = linalg.as_vector(state)
    if v.size != 4:
        raise DimensionError("correlation_check needs a 4-dimensional state")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-9:
        raise DomainError(f"state is not normalised (norm {norm})")
    p = np.abs(v) ** 2
    return bool(p[0] + p[3] >= threshold or p[1] + p[2] >= threshold)


# -- subspace propositions ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SubspaceProposition:
    projector: np.ndarray
    kind: str = "general"
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.projector, dtype=complex)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise DimensionError("projector must be square")
        if not np.allclose(p, p.conj().T, atol=PROJ_TOL, rtol=0):
            raise ValidationError("projector is not Hermitian")
        if not np.allclose(p @ p, p, atol=PROJ_TOL, rtol=0):
            raise ValidationError("projector is not idempotent")
        object.__setattr__(self, "projector", p)

    @classmethod
    def span(cls, vectors: Iterable, dim: int | None = None, kind: str = "general",
             label: str = "") -> "SubspaceProposition":
        vecs = [linalg.as_vector(v) for v in vectors]
        if not vecs:
            if dim is None:
                raise DimensionError("dimension required for the zero subspace")
            return cls(np.zeros((dim, dim), dtype=complex), kind, label)
        q = linalg.orthonormal_range(np.array(vecs).T)
        return cls(q @ q.conj().T, kind, label)

    @classmethod
    def zero(cls, dim: int) -> "SubspaceProposition":
        return cls(np.zeros((dim, dim), dtype=complex), "general", "0")

    @classmethod
    def whole(cls, dim: int) -> "SubspaceProposition":
        return cls(np.eye(dim, dtype=complex), "general", "1")

    @property
    def dim(self) -> int:
        return self.projector.shape[0]

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.projector).real)))

    def basis(self) -> np.ndarray:
        w, v = np.linalg.eigh(self.projector)
        return v[:, w > 0.5]

    def complement(self) -> "SubspaceProposition":
        return SubspaceProposition(np.eye(self.dim) - self.projector, "general",
                                   f"{self.label}'" if self.label else "")

    def meet(self, other: "SubspaceProposition") -> "SubspaceProposition":
        return meet(self, other)

    def join(self, other: "SubspaceProposition") -> "SubspaceProposition":
        return join(self, other)

    def distance(self, other: "SubspaceProposition") -> float:
        return float(np.linalg.norm(self.projector - other.projector, 2))

    def equals(self, other: "SubspaceProposition", tol: float = EQ_TOL) -> bool:
        return self.dim == other.dim and self.distance(other) <= tol

    def leq(self, other: "SubspaceProposition", tol: float = EQ_TOL) -> bool:
        return float(np.linalg.norm(other.projector @ self.projector - self.projector, 2)) <= tol

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "rank": self.rank,
            "projector": _complex_matrix(self.projector),
        }


def _same_dim(p: SubspaceProposition, q: SubspaceProposition) -> None:
    if p.dim != q.dim:
        raise DimensionError("propositions live in different spaces")


def _spectral_projector(h: np.ndarray, keep) -> np.ndarray:
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    cols = v[:, keep(w)]
    return cols @ cols.conj().T


def meet(p: SubspaceProposition, q: SubspaceProposition) -> SubspaceProposition:
    """Intersection of ranges.

    This is the limit of the alternating projections ``(P Q P)^n``, read off
    directly as the eigenvalue-1 eigenspace of ``P Q P``.
    """
    _same_dim(p, q)
    pqp = p.projector @ q.projector @ p.projector
    return SubspaceProposition(_spectral_projector(pqp, lambda w: w >= 1 - PROJ_TOL))


def join(p: SubspaceProposition, q: SubspaceProposition) -> SubspaceProposition:
    """Closed span of both ranges, i.e. the range of ``P + Q``."""
    _same_dim(p, q)
    return SubspaceProposition(_spectral_projector(p.projector + q.projector,
                                                   lambda w: w > PROJ_TOL))


def complement(p: SubspaceProposition) -> SubspaceProposition:
    return p.complement()


def compatibility(p: SubspaceProposition, q: SubspaceProposition) -> bool:
    _same_dim(p, q)
    qc, pc = q.complement(), p.complement()
    return (join(meet(p, q), meet(p, qc)).equals(p)
            and join(meet(q, p), meet(q, pc)).equals(q))


def orthomodular_defect(p: SubspaceProposition, q: SubspaceProposition) -> float:
    """Distance between ``q`` and ``p v (p' ^ q)``; zero when ``p <= q``."""
    return q.distance(join(p, meet(p.complement(), q)))


def random_subspace(rng: np.random.Generator, dim: int, rank: int,
                    inside: SubspaceProposition | None = None) -> SubspaceProposition:
    if inside is None:
        host = np.eye(dim, dtype=complex)
    else:
        host = inside.basis()
    k = host.shape[1]
    coeffs = rng.normal(size=(k, rank)) + 1j * rng.normal(size=(k, rank))
    return SubspaceProposition.span((host @ coeffs).T, dim)


def random_ordered_pair(rng: np.random.Generator, max_dim: int = 8):
    """A random pair ``p <= q`` in a random dimension between 2 and ``max_dim``."""
    dim = int(rng.integers(2, max_dim + 1))
    q_rank = int(rng.integers(1, dim + 1))
    q = random_subspace(rng, dim, q_rank)
    p_rank = int(rng.integers(0, q_rank + 1))
    p = random_subspace(rng, dim, p_rank, inside=q) if p_rank else SubspaceProposition.zero(dim)
    return p, q


@dataclass(frozen=True)
class DistributivityReport:
    dim: int
    found: bool
    p: SubspaceProposition | None = None
    q: SubspaceProposition | None = None
    r: SubspaceProposition | None = None
    lhs: SubspaceProposition | None = None
    rhs: SubspaceProposition | None = None
    restricted: bool = False
    triples_checked: int = 0

    @property
    def lhs_rank(self) -> int | None:
        return None if self.lhs is None else self.lhs.rank

    @property
    def rhs_rank(self) -> int | None:
        return None if self.rhs is None else self.rhs.rank

    def to_dict(self) -> dict:
        out = {
            "dim": self.dim,
            "found": self.found,
            "restricted_to_boolean": self.restricted,
            "triples_checked": self.triples_checked,
            "lhs_rank": self.lhs_rank,
            "rhs_rank": self.rhs_rank,
        }
        if self.found:
            out.update({
                "p": self.p.to_dict(), "q": self.q.to_dict(), "r": self.r.to_dict(),
                "lhs": self.lhs.to_dict(), "rhs": self.rhs.to_dict(),
            })
        return out


def distributivity_sides(p, q, r):
    """``r ^ (p v q)`` and ``(r ^ p) v (r ^ q)``."""
    return meet(r, join(p, q)), join(meet(r, p), meet(r, q))


BOOLEAN_SEARCH_MAX_DIM = 4


def distributivity_witness(dim: int, boolean_only: bool = False) -> DistributivityReport:
    """A triple on which the distributive law fails.

    With ``boolean_only`` every triple of diagonal (coordinate) propositions
    is tried instead; that sublattice is Boolean, so none is found.
    """
    if dim < 2:
        raise DomainError("a distributivity witness needs dim >= 2")
    linalg.check_dim(dim)
    if not boolean_only:
        e0, e1 = linalg.basis_vector(dim, 0), linalg.basis_vector(dim, 1)
        p = SubspaceProposition.span([e0], kind="standard", label="p")
        q = SubspaceProposition.span([e1], kind="standard", label="q")
        r = SubspaceProposition.span([(e0 + e1) / math.sqrt(2)], label="r")
        lhs, rhs = distributivity_sides(p, q, r)
        return DistributivityReport(dim, not lhs.equals(rhs), p, q, r, lhs, rhs, False, 1)

    if dim > BOOLEAN_SEARCH_MAX_DIM:
        raise CapacityError(f"exhaustive Boolean search is limited to dim <= {BOOLEAN_SEARCH_MAX_DIM}")
    props = []
    for mask in range(2 ** dim):
        diag = np.array([(mask >> i) & 1 for i in range(dim)], dtype=complex)
        props.append(SubspaceProposition(np.diag(diag), "standard", f"mask{mask}"))
    checked = 0
    for p in props:
        for q in props:
            pq = join(p, q)
            for r in props:
                checked += 1
                lhs = meet(r, pq)
                rhs = join(meet(r, p), meet(r, q))
                if not lhs.equals(rhs):
                    return DistributivityReport(dim, True, p, q, r, lhs, rhs, True, checked)
    return DistributivityReport(dim, False, restricted=True, triples_checked=checked)


# -- combined states ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CombinedState:
    system: CompositeSystem
    support: tuple[int, ...]
    amplitudes: np.ndarray
    vector: np.ndarray
    index: int
    companion_bases: tuple[np.ndarray, ...]
    complement: SubspaceProposition
    recursions: int
    name: str = ""

    @property
    def companion_indices(self) -> tuple[int, ...]:
        return tuple(self.index + j for j in range(1, len(self.companion_bases) + 1))

    @property
    def indices(self) -> tuple[int, ...]:
        return (self.index, *self.companion_indices)

    def proposition(self) -> SubspaceProposition:
        return SubspaceProposition(np.outer(self.vector, self.vector.conj()), "combined",
                                   self.name or f"Phi[{self.index}]")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "support": list(self.support),
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            "index": self.index,
            "companion_indices": list(self.companion_indices),
        }


def combined_index(total_dim: int, support: Iterable[int]) -> int:
    return total_dim + math.prod(nth_prime(m) for m in support)


def make_combined_state(
    system: CompositeSystem,
    support: Sequence[int],
    amplitudes: Sequence[complex] | None = None,
    name: str = "",
) -> CombinedState:
    """Superpose standard states ``support`` (1-based) into a combined state."""
    support = tuple(int(m) for m in support)
    big_m = system.total_dim
    if len(set(support)) != len(support):
        raise ValidationError(f"duplicate indices in support {support}")
    if len(support) < 2:
        raise ValidationError("a combined state needs at least two constituents")
    for m in support:
        if not 1 <= m <= big_m:
            raise ValidationError(f"support index {m} outside 1..{big_m}")
    if amplitudes is None:
        amps = np.full(len(support), 1 / math.sqrt(len(support)), dtype=complex)
    else:
        amps = np.asarray(list(amplitudes), dtype=complex)
        if amps.shape != (len(support),):
            raise ValidationError("one amplitude per support index required")
        if np.any(np.abs(amps) < 1e-12):
            raise DegeneracyError("combined-state amplitudes must be nonzero")
        norm = float(np.linalg.norm(amps))
        amps = amps / norm
    linalg.ensure_finite(amps, "amplitudes")

    phi = np.zeros(big_m, dtype=complex)
    for m, a in zip(support, amps):
        phi[m - 1] = a

    companions: list[np.ndarray] = []
    recursions = 0
    for m in support[:-1]:
        companions.append(linalg.gram_schmidt_extend([phi, *companions], system.basis(m)))
        recursions += 1

    sup_proj = np.zeros((big_m, big_m), dtype=complex)
    for m in support:
        sup_proj[m - 1, m - 1] = 1.0
    comp = SubspaceProposition(sup_proj - np.outer(phi, phi.conj()), "complement",
                               f"{name}'" if name else "")
    return CombinedState(system, support, amps, phi, combined_index(big_m, support),
                         tuple(companions), comp, recursions, name)


def complementary_pair(combined: CombinedState) -> SubspaceProposition:
    """The proposition that is false whenever the combined state is true."""
    return combined.complement


def check_slot_collisions(states: Sequence[CombinedState]) -> None:
    """Distinct combined states must not share eigenvalue slots."""
    seen: dict[int, str] = {}
    for st in states:
        label = st.name or str(st.support)
        for idx in st.indices:
            if idx in seen:
                raise ValidationError(
                    f"slot {idx} of combined state {label} collides with {seen[idx]}")
            seen[idx] = label


@dataclass(frozen=True, eq=False)
class Observable:
    matrix: np.ndarray
    eigen_map: dict
    eigenvectors: dict = field(default_factory=dict)

    def apply(self, v) -> np.ndarray:
        return self.matrix @ linalg.as_vector(v)


def observable_standard(system: CompositeSystem) -> Observable:
    n = system.total_dim
    mat = np.diag(np.arange(1, n + 1)).astype(complex)
    return Observable(mat, {m: float(m) for m in range(1, n + 1)},
                      {m: system.basis(m) for m in range(1, n + 1)})


def observable_extended(system: CompositeSystem, combined: CombinedState) -> Observable:
    """Observable reading ``m*`` on the combined state and ``m`` off its support."""
    if combined.system.subsystem_dims != system.subsystem_dims:
        raise ValidationError("combined state was built on a different system")
    n = system.total_dim
    mat = np.zeros((n, n), dtype=complex)
    eigen_map: dict[int, float] = {}
    vectors: dict[int, np.ndarray] = {}
    for idx, vec in zip(combined.indices, (combined.vector, *combined.companion_bases)):
        mat += idx * np.outer(vec, vec.conj())
        eigen_map[idx] = float(idx)
        vectors[idx] = vec
    for m in range(1, n + 1):
        if m not in combined.support:
            mat[m - 1, m - 1] += m
            eigen_map[m] = float(m)
            vectors[m] = system.basis(m)
    return Observable(mat, eigen_map, vectors)


# -- serialisation ----------------------------------------------------------------


def _complex_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def to_document(system: CompositeSystem, combined: Sequence[CombinedState] = ()) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "system",
        "system": system.to_dict(),
        "combined": [c.to_dict() for c in combined],
    }


def from_document(doc: dict) -> tuple[CompositeSystem, list[CombinedState]]:
    if doc.get("schema") != SCHEMA or doc.get("kind") != "system":
        raise ValidationError(f"not a {SCHEMA} system document")
    sd = doc["system"]
    system = build_composite(sd["dims"], sd.get("names"), sd.get("state_labels"))
    states = []
    for entry in doc.get("combined", []):
        amps = [complex(re, im) for re, im in entry["amplitudes"]]
        st = make_combined_state(system, entry["support"], amps, entry.get("name", ""))
        if "index" in entry and entry["index"] != st.index:
            raise ValidationError(f"stored index {entry['index']} disagrees with {st.index}")
        states.append(st)
    check_slot_collisions(states)
    return system, states


def standard_proposition(system: CompositeSystem, m: int) -> SubspaceProposition:
    return SubspaceProposition.span([system.basis(m)], kind="standard",
                                    label=system.basis_label(m))


def reduce_join(props: Sequence[SubspaceProposition]) -> SubspaceProposition:
    return reduce(join, props)
