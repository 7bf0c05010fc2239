"""Minimal Kraus representations of a completely positive map.

Any two Kraus sets related by ``Λ_i → Σ_j u_ij Λ_j`` (``u`` unitary, sets
padded with zeros) describe the same map. A set is minimal when its
operators are linearly independent; ``reduce`` removes one dependence at a
time by rotating a null combination into a single zero operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import max_entangled
from .complexity import SupportSubspace
from .matcore import DEFAULT_TOL, DimensionError, Tolerances, dagger, eigh, numerical_rank


@dataclass(frozen=True, eq=False)
class KrausSet:
    ops: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise ValueError("a Kraus set needs a nonempty list of equal-shape matrices")
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops.shape[2]

    def __len__(self):
        return self.ops.shape[0]

    def gram(self) -> np.ndarray:
        """``G_ij = Tr(Λ_i† Λ_j)``."""
        flat = self.ops.reshape(len(self), -1)
        return flat.conj() @ flat.T

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("kij,jl,kml->im", self.ops, rho, self.ops.conj())


def minimal_count(ks: KrausSet, tol: Tolerances = DEFAULT_TOL) -> int:
    return numerical_rank(ks.gram(), tol)


def _unitary_with_row(gamma: np.ndarray) -> np.ndarray:
    """A unitary whose first row is ``gamma`` up to a global phase."""
    n = gamma.size
    q, _ = np.linalg.qr(np.column_stack([gamma, np.eye(n, dtype=complex)]))
    return q.T


def reduce(ks: KrausSet, tol: Tolerances = DEFAULT_TOL) -> KrausSet:
    """Drop linearly dependent operators while keeping the induced map fixed."""
    ops = ks.ops.copy()
    while len(ops) > 1:
        g = KrausSet(ops).gram()
        vals, vecs = eigh(g, tol)
        top = vals[0]
        if top <= 0:
            return KrausSet(ops[:1] * 0)
        if vals[-1] > tol.eps_rank * top:
            break
        # Σ_j γ_j Λ_j = 0 for the null vector γ of the Gram matrix
        gamma = vecs[:, -1]
        u = _unitary_with_row(gamma)
        ops = np.einsum("ij,jab->iab", u, ops)[1:]
    return KrausSet(ops)


def upper_bound(N: int, R: int) -> int:
    """Largest irreducible Kraus count for a map obeying ``R`` transition constraints."""
    if not 1 <= R <= N * N:
        raise ValueError(f"R={R} outside [1, {N * N}]")
    return N**4 - R * (N * N - 1)


@dataclass(frozen=True)
class ConstraintReport:
    holds: bool
    coefficients: np.ndarray  # coefficients[j, i] = ⟨target|Λ_j|r_i⟩
    residual: float
    success_per_vector: np.ndarray  # Σ_j |coefficients[j, i]|²

    @property
    def success_probability(self) -> float:
        return float(self.success_per_vector.mean()) if self.success_per_vector.size else 0.0


def constraint_check(ks: KrausSet, supp: SupportSubspace, target=None, tol: Tolerances = DEFAULT_TOL) -> ConstraintReport:
    """Check that every operator maps each support vector onto a multiple of ``target`` (default ``|ψ₀⟩``).

    The squared coefficients summed over operators give the success
    probability of the transition, equal to 1 for deterministic maps.
    """
    if ks.dim != supp.dim_total:
        raise DimensionError(f"operators act on dimension {ks.dim}, support lives in {supp.dim_total}")
    if target is None:
        target = max_entangled(int(round(np.sqrt(supp.dim_total))))
    target = np.asarray(target, dtype=complex)
    target = target / np.linalg.norm(target)
    images = np.einsum("jab,bi->jia", ks.ops, supp.basis)
    coeff = np.einsum("a,jia->ji", target.conj(), images)
    resid = images - coeff[..., None] * target[None, None, :]
    worst = float(np.max(np.abs(resid), initial=0.0))
    success = np.sum(np.abs(coeff) ** 2, axis=0)
    uniform = success.size == 0 or float(np.ptp(success)) <= tol.eps_eq
    return ConstraintReport(worst <= tol.eps_eq and uniform, coeff, worst, success)


def constrained_map(N: int, support_basis: np.ndarray, extra: int, rng: np.random.Generator, scale: float = 0.1) -> KrausSet:
    """Random Kraus set satisfying ``Λ_j |r_i⟩ = δ_ij |ψ₀⟩`` on the given support.

    ``support_basis`` holds R orthonormal columns; the first R operators carry
    the transitions and ``extra`` more operators vanish on the support.
    Operators are written in block form relative to bases whose leading
    vectors are the support and ``|ψ₀⟩``.
    """
    d = N * N
    R = support_basis.shape[1]
    src = _complete_basis(support_basis)
    dst = _complete_basis(max_entangled(N)[:, None])

    def rand(rows, cols):
        return scale * (rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols)))

    ops = []
    for j in range(R + extra):
        block = np.zeros((d, d), dtype=complex)
        if j < R:
            block[0, j] = 1.0
            block[1:, R:] = rand(d - 1, d - R)
        else:
            block[:, R:] = rand(d, d - R)
        ops.append(dst @ block @ dagger(src))
    return KrausSet(np.array(ops))


def _complete_basis(cols: np.ndarray) -> np.ndarray:
    """Unitary whose leading columns are exactly ``cols`` (orthonormal)."""
    d, r = cols.shape
    q, _ = np.linalg.qr(np.column_stack([cols, np.eye(d, dtype=complex)]))
    q = q[:, :d]
    # QR may flip phases of the leading columns; restore them exactly
    q[:, :r] = cols
    return q
