"""Dense complex linear algebra for small composite systems.

Vectors and matrices are plain numpy arrays. Everything here is a pure
function; nothing mutates its arguments.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CapacityError,
    DegeneracyError,
    DimensionError,
    DomainError,
    NumericError,
)

DEFAULT_DIM_CAP = 4096
ORTHO_TOL = 1e-10
DEGENERACY_TOL = 1e-9
SINGULAR_TOL = 1e-10
PHASE_TOL = 1e-12
CLUSTER_TOL = 1e-4


def dim_cap() -> int:
    """Current dimension cap; ``BETA_DIM_CAP`` overrides the default."""
    raw = os.environ.get("BETA_DIM_CAP")
    if raw is None or raw.strip() == "":
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DomainError(f"BETA_DIM_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise DomainError("BETA_DIM_CAP must be positive")
    return cap


def check_dim(n: int, what: str = "dimension") -> int:
    cap = dim_cap()
    if n > cap:
        raise CapacityError(f"{what} {n} exceeds the dimension cap {cap}")
    return n


def ensure_finite(x, what: str = "result"):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{what} contains NaN or Inf")
    return x


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty vector, got shape {arr.shape}")
    return arr


def as_square(m) -> np.ndarray:
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def basis_vector(dim: int, index: int) -> np.ndarray:
    """Unit vector ``e_index`` (0-based) in ``C^dim``."""
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def is_hermitian(m, tol: float = ORTHO_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=tol, rtol=0)


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two vectors or of two matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise DimensionError("tensor needs two vectors or two matrices")
    if a.size == 0 or b.size == 0:
        raise DimensionError("tensor operands must have dimension >= 1")
    for da, db in zip(a.shape, b.shape):
        check_dim(da * db, "tensor product dimension")
    return ensure_finite(np.kron(a, b))


def tensor_all(factors: Sequence) -> np.ndarray:
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = tensor(out, f)
    return out


def direct_sum(u, v) -> np.ndarray:
    u = np.asarray(u)
    v = np.asarray(v)
    if u.ndim != 1 or v.ndim != 1:
        raise DimensionError("direct_sum takes two vectors")
    return np.concatenate([u, v])


def hadamard(u, v) -> np.ndarray:
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise DimensionError(f"hadamard needs equal shapes, got {u.shape} and {v.shape}")
    return u * v


# -- eigen decomposition ----------------------------------------------------


def _quadratic_roots(m: np.ndarray) -> list[complex]:
    a, b, c, d = complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1])
    tr = a + d
    det = a * d - b * c
    # (a-d)^2 + 4bc avoids the tr^2 - 4 det cancellation
    root = cmath.sqrt((a - d) ** 2 + 4 * b * c)
    big = (tr + root) / 2 if (tr.conjugate() * root).real >= 0 else (tr - root) / 2
    if big == 0:
        return [0j, 0j]
    return [big, det / big]


def _cubic_roots(m: np.ndarray) -> list[complex]:
    # characteristic polynomial x^3 + p2 x^2 + p1 x + p0
    tr = complex(np.trace(m))
    minors = (
        m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    )
    # cofactor expansion: LU would divide by subnormal pivots
    det = complex(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    p2, p1, p0 = -tr, complex(minors), -det
    shift = -p2 / 3
    p = p1 - p2 * p2 / 3
    q = 2 * p2 ** 3 / 27 - p2 * p1 / 3 + p0
    # relative scale: a tiny matrix can still have well-separated roots
    scale = max(abs(p) ** 0.5, abs(q) ** (1 / 3), abs(shift), 1e-300)
    disc = cmath.sqrt(q * q / 4 + p ** 3 / 27)
    u3 = -q / 2 + disc
    if abs(u3) < abs(-q / 2 - disc):
        u3 = -q / 2 - disc
    if u3 == 0:
        roots = [shift] * 3
    else:
        u = u3 ** (1 / 3)
        omega = complex(-0.5, math.sqrt(3) / 2)
        roots = []
        for k in range(3):
            uk = u * omega ** k
            roots.append(uk - p / (3 * uk) + shift)

    def poly(x):
        return ((x + p2) * x + p1) * x + p0

    def dpoly(x):
        return (3 * x + 2 * p2) * x + p1

    polished = []
    for r in roots:
        for _ in range(4):
            dp = dpoly(r)
            if dp == 0 or abs(dp) < 1e-12 * scale ** 2:
                break
            step = poly(r) / dp
            r -= step
            if abs(step) <= 1e-16 * max(1.0, abs(r)):
                break
        polished.append(r)
    # clustered roots are only determined to ~eps**(1/3) by the polynomial
    # coefficients; the matrix itself pins them down far better
    norm = float(np.max(np.abs(m)))
    gaps = [abs(a - b) for i, a in enumerate(polished) for b in polished[i + 1:]]
    if min(gaps) < CLUSTER_TOL * norm:
        try:
            return [complex(z) for z in np.linalg.eigvals(m)]
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigenvalue iteration failed: {exc}") from None
    return polished


def _null_vectors(m: np.ndarray, lam: complex, k: int) -> list[np.ndarray]:
    n = m.shape[0]
    scale = max(1.0, float(np.max(np.abs(m))))
    shifted = m.astype(complex) - lam * np.eye(n)
    # entries this small cannot move the null space at the 1e-7 cutoff, but
    # near-subnormal values can stall LAPACK's SVD iteration
    shifted[np.abs(shifted) < np.finfo(float).eps ** 2 * scale] = 0
    try:
        _, s, vh = np.linalg.svd(shifted)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvector solve did not converge: {exc}") from None
    null = [vh[j].conj() for j in range(n - k, n) if s[j] <= 1e-7 * scale]
    if not null:
        null = [vh[-1].conj()]
    if len(null) > 1:
        null = _canonical_basis(np.array(null).T)
    # defective eigenvalue: fewer independent vectors than its multiplicity
    while len(null) < k:
        null.append(null[-1])
    return null


def _canonical_basis(cols: np.ndarray) -> list[np.ndarray]:
    """Basis of a subspace obtained by orthonormalising projected e_0, e_1, ..."""
    q, _ = np.linalg.qr(cols)
    proj = q @ q.conj().T
    out: list[np.ndarray] = []
    for j in range(proj.shape[0]):
        v = proj[:, j].copy()
        for b in out:
            v -= np.vdot(b, v) * b
        if np.linalg.norm(v) > 1e-6:
            out.append(v / np.linalg.norm(v))
        if len(out) == cols.shape[1]:
            break
    return out


def _fix_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    for c in v:
        if abs(c) > PHASE_TOL:
            return v * (abs(c) / c)
    return v


def _sort_key(lam: complex):
    return (-round(lam.real, 12), -round(lam.imag, 12))


def eigen(m) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs sorted by descending real part.

    Dimensions up to 3 use the characteristic polynomial in closed form
    (then Newton-polished); larger matrices go through LAPACK.
    Eigenvectors are unit norm with their first nonzero entry real and
    nonnegative.
    """
    m = as_square(m)
    n = check_dim(m.shape[0])
    ensure_finite(m, "matrix")
    norm = float(np.max(np.abs(m))) if m.size else 0.0
    if norm == 0.0:
        return [(0j, basis_vector(n, k).astype(complex)) for k in range(n)]
    # eigenvalues scale with the matrix; solving at unit scale keeps every
    # tolerance below relative. A power-of-two factor makes the scaling exact
    # and avoids overflow for subnormal entries.
    e = math.frexp(norm)[1]
    m = m.astype(complex)
    unit = np.ldexp(m.real, -e) + 1j * np.ldexp(m.imag, -e)
    return [(complex(math.ldexp(lam.real, e), math.ldexp(lam.imag, e)), vec)
            for lam, vec in _eigen_unit(unit)]


def _eigen_unit(m: np.ndarray) -> list[tuple[complex, np.ndarray]]:
    n = m.shape[0]
    if n <= 3:
        if n == 1:
            roots = [complex(m[0, 0])]
        elif n == 2:
            roots = _quadratic_roots(m)
        else:
            roots = _cubic_roots(m)
        if is_hermitian(m):
            roots = [complex(r.real, 0.0) for r in roots]
        roots.sort(key=_sort_key)
        scale = max(1.0, float(np.max(np.abs(m))))
        pairs: list[tuple[complex, np.ndarray]] = []
        i = 0
        while i < n:
            j = i + 1
            while j < n and abs(roots[j] - roots[i]) <= 1e-8 * scale:
                j += 1
            group = roots[i:j]
            lam = sum(group) / len(group)
            for lam_k, vec in zip(group, _null_vectors(m, lam, len(group))):
                pairs.append((lam_k, _fix_phase(vec)))
            i = j
    else:
        try:
            if is_hermitian(m):
                w, v = np.linalg.eigh(m)
            else:
                w, v = np.linalg.eig(m)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigen solver did not converge: {exc}") from exc
        pairs = [(complex(w[k]), _fix_phase(v[:, k])) for k in range(n)]
        pairs.sort(key=lambda p: _sort_key(p[0]))

    for lam, vec in pairs:
        ensure_finite(vec, "eigenvector")
        if not np.isfinite(lam.real) or not np.isfinite(lam.imag):
            raise NumericError("non-finite eigenvalue")
    return pairs


def eigenvalues(m) -> list[complex]:
    return [lam for lam, _ in eigen(m)]


# -- orthogonalisation -------------------------------------------------------


def gram_schmidt_extend(basis: Sequence, v) -> np.ndarray:
    """Orthonormalise ``v`` against an orthonormal ``basis``.

    Two classical passes of projection removal keep the result orthogonal
    to 1e-10 even for nearly dependent inputs.
    """
    v = as_vector(v)
    vecs = [as_vector(b) for b in basis]
    for b in vecs:
        if b.shape != v.shape:
            raise DimensionError("basis vectors and v must share a dimension")
    if vecs:
        stack = np.array(vecs)
        gram = stack.conj() @ stack.T
        if not np.allclose(gram, np.eye(len(vecs)), atol=ORTHO_TOL, rtol=0):
            raise DomainError("basis is not orthonormal")
    w = v.copy()
    for _ in range(2):
        for b in vecs:
            w = w - (np.vdot(b, w) / np.vdot(b, b)) * b
    residual = float(np.linalg.norm(w))
    if residual < DEGENERACY_TOL * max(1.0, float(np.linalg.norm(v))):
        raise DegeneracyError(f"vector is dependent on the basis (residual {residual:.3g})")
    return ensure_finite(w / residual)


def orthonormal_range(m, tol: float = 1e-10) -> np.ndarray:
    """Columns spanning the range of ``m`` (SVD based)."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    return u[:, s > tol * scale]


# -- polar decomposition -----------------------------------------------------


@dataclass(frozen=True)
class PolarFactors:
    rotation: np.ndarray
    stretch: np.ndarray
    theta: float

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "stretch": self.stretch.tolist(),
            "theta": self.theta,
        }


def polar(m) -> PolarFactors:
    """Right polar decomposition ``m = Q S`` of a real invertible matrix."""
    m = as_square(m)
    if np.iscomplexobj(m) and np.any(np.abs(np.imag(m)) > 0):
        raise DomainError("polar expects a real matrix")
    m = np.real(m).astype(float)
    check_dim(m.shape[0])
    ensure_finite(m, "matrix")
    u, s, vt = np.linalg.svd(m)
    if s[0] == 0 or s[-1] / s[0] < SINGULAR_TOL:
        raise NumericError("polar decomposition of a singular matrix")
    q = u @ vt
    st = vt.T @ np.diag(s) @ vt
    st = (st + st.T) / 2
    theta = math.acos(min(1.0, max(-1.0, float(q[0, 0]))))
    return PolarFactors(ensure_finite(q), ensure_finite(st), theta)


# -- entropy -----------------------------------------------------------------


def von_neumann_entropy(weights) -> float:
    """Entropy in bits of a probability vector (eigenvalues of a density)."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise DomainError("entropy of an empty distribution")
    if np.any(~np.isfinite(w)):
        raise DomainError("weights must be finite")
    if np.any(w < -1e-12):
        raise DomainError("weights must be nonnegative")
    if abs(float(w.sum()) - 1.0) > 1e-9:
        raise DomainError(f"weights sum to {w.sum()!r}, not 1")
    pos = w[w > 0]
    h = float(-np.sum(pos * np.log2(pos)))
    return min(max(h, 0.0), math.log2(w.size)) + 0.0  # no negative zero


def density_entropy(rho) -> float:
    """Entropy in bits of a density operator."""
    rho = as_square(rho)
    if not is_hermitian(rho):
        raise DomainError("density operator must be Hermitian")
    w = np.linalg.eigvalsh(rho.astype(complex))
    w = np.clip(w, 0.0, None)
    return von_neumann_entropy(w / w.sum())
