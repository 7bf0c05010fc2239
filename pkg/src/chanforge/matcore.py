"""Dense complex linear algebra shared by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Composite
indices are big-endian: in ``H_x ⊗ H_y`` the basis vector ``|i⟩|j⟩`` sits at
position ``i * dim_y + j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotHermitianError(ValueError):
    """A matrix that must be Hermitian is not."""


class NotPositiveError(ValueError):
    """A matrix that must be positive semidefinite has a negative eigenvalue."""


@dataclass(frozen=True)
class Tolerances:
    eps_rank: float = 1e-10
    eps_tp: float = 1e-9
    eps_eq: float = 1e-9
    eps_herm: float = 1e-10

    def __post_init__(self):
        for name in ("eps_rank", "eps_tp", "eps_eq", "eps_herm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def replace(self, **changes) -> "Tolerances":
        values = {k: getattr(self, k) for k in ("eps_rank", "eps_tp", "eps_eq", "eps_herm")}
        values.update({k: v for k, v in changes.items() if v is not None})
        return Tolerances(**values)

    def as_dict(self) -> dict:
        return {
            "eps_rank": self.eps_rank,
            "eps_tp": self.eps_tp,
            "eps_eq": self.eps_eq,
            "eps_herm": self.eps_herm,
        }


DEFAULT_TOL = Tolerances()

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def tensor(*ops) -> np.ndarray:
    """Kronecker product of matrices (or vectors), first factor most significant."""
    if not ops:
        raise DimensionError("tensor needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def swap_operator(dim_x: int, dim_y: int) -> np.ndarray:
    """Unitary mapping ``|i⟩|j⟩`` in ``H_x ⊗ H_y`` to ``|j⟩|i⟩`` in ``H_y ⊗ H_x``."""
    out = np.zeros((dim_x * dim_y, dim_x * dim_y), dtype=complex)
    for i in range(dim_x):
        for j in range(dim_y):
            out[j * dim_x + i, i * dim_y + j] = 1.0
    return out


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL.eps_herm) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def max_abs_diff(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b), initial=0.0))


def is_unitary(m: np.ndarray, tol: float = DEFAULT_TOL.eps_eq) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    eye = np.eye(m.shape[0])
    return max_abs_diff(dagger(m) @ m, eye) <= tol and max_abs_diff(m @ dagger(m), eye) <= tol


def is_projector(m: np.ndarray, tol: float = DEFAULT_TOL.eps_eq) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return max_abs_diff(m, dagger(m)) <= tol and max_abs_diff(m @ m, m) <= tol


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor of ``m`` whose index is not listed in ``keep``.

    The kept factors appear in the result in increasing index order.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    if m.shape[0] != m.shape[1]:
        raise DimensionError("partial_trace needs a square matrix")
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not multiply to {m.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep {keep} out of range for {len(dims)} factors")

    n = len(dims)
    t = m.reshape(dims + dims)
    # trace from the highest factor down so earlier axis numbers stay valid
    for factor in reversed(range(n)):
        if factor in keep:
            continue
        t = np.trace(t, axis1=factor, axis2=factor + t.ndim // 2)
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kept_dim, kept_dim)


def eigh(m, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with eigenvalues in descending order."""
    m = as_matrix(m)
    if not is_hermitian(m, tol.eps_herm):
        raise NotHermitianError("eigh requires a Hermitian matrix")
    h = 0.5 * (m + dagger(m))
    vals, vecs = np.linalg.eigh(h)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def schmidt(psi, dim_a: int, dim_b: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Schmidt decomposition of a pure state on ``H_a ⊗ H_b``.

    Returns ``(coefficients, basis_a, basis_b)`` where the coefficients are
    descending and ``psi == Σ_k c_k basis_a[:, k] ⊗ basis_b[:, k]``. The
    bases are complete unitaries; only the first ``min(dim_a, dim_b)``
    columns pair with coefficients.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != dim_a * dim_b:
        raise DimensionError(f"state of length {psi.size} is not {dim_a}x{dim_b}")
    u, s, vh = np.linalg.svd(psi.reshape(dim_a, dim_b))
    return s, u, vh.T


def numerical_rank(m, tol: Tolerances = DEFAULT_TOL) -> int:
    """Count eigenvalues above ``eps_rank`` times the largest one.

    Raises ``NotPositiveError`` when an eigenvalue is negative beyond the
    equality slack, since the input is then not a valid state.
    """
    vals, _ = eigh(m, tol)
    top = vals[0] if vals.size else 0.0
    scale = max(1.0, abs(top))
    if vals.size and vals[-1] < -tol.eps_eq * scale:
        raise NotPositiveError(f"negative eigenvalue {vals[-1]:.3e}")
    if top <= 0:
        return 0
    return int(np.sum(vals > tol.eps_rank * top))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return np.asarray(unitary_group.rvs(dim, random_state=rng), dtype=complex)


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + dagger(g))
