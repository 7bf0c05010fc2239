"""LOCC control resources and the maps they induce.

A set of resources (shared ancilla, per-outcome local operations on the
sender side ``A⊗a`` and receiver side ``B⊗b``) turns a channel ``ε`` into a
modified channel ``ε̃``. At the level of Choi states the same resources act
as a completely positive map ``λ`` on ``H_B ⊗ H_A``; both are built here
from the block operators

    A_{l,j} = ⟨l|_a L^{Aa} |j⟩_a,   B_{k,j} = ⟨k|_b L^{Bb} |j⟩_b,

taken with respect to the Schmidt bases of the ancilla.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import Channel, ChannelError, ChoiState, compose
from .matcore import (
    DEFAULT_TOL,
    DimensionError,
    Tolerances,
    as_matrix,
    dagger,
    eigh,
    is_projector,
    is_unitary,
    max_abs_diff,
    schmidt,
)


class ResourceError(ValueError):
    """Control resources fail validation."""


@dataclass(frozen=True, eq=False)
class Outcome:
    """Local operations attached to one classical outcome.

    The sender applies ``L_Aa = Pi_Aa @ U_Aa``. The receiver applies
    ``L_Bb = F_Bb @ Pi_Bb @ U_Bb``; ``F_Bb`` is an optional contraction
    (a POVM element such as a filter) and defaults to the identity.
    """

    U_Aa: np.ndarray
    Pi_Aa: np.ndarray
    U_Bb: np.ndarray
    Pi_Bb: np.ndarray
    F_Bb: np.ndarray | None = None
    label: str = ""

    @property
    def L_Aa(self) -> np.ndarray:
        return self.Pi_Aa @ self.U_Aa

    @property
    def L_Bb(self) -> np.ndarray:
        out = self.Pi_Bb @ self.U_Bb
        return out if self.F_Bb is None else self.F_Bb @ out


def outcome(U_Aa=None, Pi_Aa=None, U_Bb=None, Pi_Bb=None, F_Bb=None, *, dim_Aa, dim_Bb, label="") -> Outcome:
    """Build an ``Outcome``, filling omitted operators with identities."""
    eye_a = np.eye(dim_Aa, dtype=complex)
    eye_b = np.eye(dim_Bb, dtype=complex)
    return Outcome(
        U_Aa=eye_a if U_Aa is None else as_matrix(U_Aa),
        Pi_Aa=eye_a if Pi_Aa is None else as_matrix(Pi_Aa),
        U_Bb=eye_b if U_Bb is None else as_matrix(U_Bb),
        Pi_Bb=eye_b if Pi_Bb is None else as_matrix(Pi_Bb),
        F_Bb=None if F_Bb is None else as_matrix(F_Bb),
        label=label,
    )


@dataclass(frozen=True, eq=False)
class SchmidtForm:
    """Pure ancilla ``Σ_j μ_j |α_j⟩_a |β_j⟩_b``; bases are stored as columns."""

    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    def state(self) -> np.ndarray:
        r = len(self.coefficients)
        return np.einsum("j,aj,bj->ab", self.coefficients, self.basis_a[:, :r], self.basis_b[:, :r]).ravel()


@dataclass(frozen=True, eq=False)
class ControlResources:
    """Shared ancilla plus a list of per-outcome local operations.

    ``ancilla`` is a tuple of ``(weight, SchmidtForm)`` pairs; a single pair
    with weight 1 is a pure ancilla.
    """

    N: int
    dim_a: int
    dim_b: int
    ancilla: tuple
    outcomes: tuple
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "ancilla", tuple(self.ancilla))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if not self.outcomes:
            raise ResourceError("resources need at least one outcome")
        if not self.ancilla:
            raise ResourceError("resources need an ancilla")
        weights = np.array([w for w, _ in self.ancilla], dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1) > self.tol.eps_eq:
            raise ResourceError("ancilla mixture weights must be nonnegative and sum to 1")
        for _, form in self.ancilla:
            if abs(np.sum(np.abs(form.coefficients) ** 2) - 1) > 1e-9:
                raise ResourceError("Schmidt coefficients must satisfy Σμ² = 1")
            if form.basis_a.shape != (self.dim_a, self.dim_a) or form.basis_b.shape != (self.dim_b, self.dim_b):
                raise ResourceError("Schmidt bases do not match ancilla dimensions")
        da, db = self.N * self.dim_a, self.N * self.dim_b
        eq = self.tol.eps_eq
        for idx, o in enumerate(self.outcomes):
            if o.U_Aa.shape != (da, da) or o.Pi_Aa.shape != (da, da):
                raise ResourceError(f"outcome {idx}: sender operators must be {da}x{da}")
            if o.U_Bb.shape != (db, db) or o.Pi_Bb.shape != (db, db):
                raise ResourceError(f"outcome {idx}: receiver operators must be {db}x{db}")
            if not (is_unitary(o.U_Aa, eq) and is_unitary(o.U_Bb, eq)):
                raise ResourceError(f"outcome {idx}: U_Aa and U_Bb must be unitary")
            if not (is_projector(o.Pi_Aa, eq) and is_projector(o.Pi_Bb, eq)):
                raise ResourceError(f"outcome {idx}: Pi_Aa and Pi_Bb must be projectors")
            if o.F_Bb is not None:
                if o.F_Bb.shape != (db, db):
                    raise ResourceError(f"outcome {idx}: F_Bb must be {db}x{db}")
                if np.linalg.eigvalsh(dagger(o.F_Bb) @ o.F_Bb)[-1] > 1 + self.tol.eps_tp:
                    raise ResourceError(f"outcome {idx}: F_Bb must be a contraction")

    # constructors ---------------------------------------------------------

    @classmethod
    def from_schmidt(cls, N, schmidt_coefficients, outcomes, tol: Tolerances = DEFAULT_TOL):
        """Ancilla ``Σ_k μ_k |k⟩_a|k⟩_b`` in the computational basis."""
        mu = np.asarray(schmidt_coefficients, dtype=float)
        if np.any(mu < 0):
            raise ResourceError("Schmidt coefficients must be nonnegative")
        d = len(mu)
        form = SchmidtForm(mu, np.eye(d, dtype=complex), np.eye(d, dtype=complex))
        return cls(N, d, d, ((1.0, form),), tuple(outcomes), tol)

    @classmethod
    def from_state(cls, N, psi, dim_a, dim_b, outcomes, tol: Tolerances = DEFAULT_TOL):
        return cls.from_mixture(N, [(1.0, psi)], dim_a, dim_b, outcomes, tol)

    @classmethod
    def from_mixture(cls, N, components, dim_a, dim_b, outcomes, tol: Tolerances = DEFAULT_TOL):
        """Mixed ancilla given as ``[(weight, state vector), ...]``."""
        forms = []
        for w, psi in components:
            psi = np.asarray(psi, dtype=complex).ravel()
            norm = np.linalg.norm(psi)
            if abs(norm - 1) > 1e-9:
                raise ResourceError("ancilla state vectors must be normalized")
            mu, ua, ub = schmidt(psi, dim_a, dim_b)
            forms.append((float(w), SchmidtForm(mu, ua, ub)))
        return cls(N, dim_a, dim_b, tuple(forms), tuple(outcomes), tol)

    @property
    def is_pure(self) -> bool:
        return len(self.ancilla) == 1

    @property
    def schmidt_coefficients(self) -> np.ndarray:
        if not self.is_pure:
            raise ResourceError("a mixed ancilla has no single Schmidt vector")
        return self.ancilla[0][1].coefficients

    def ancilla_density(self) -> np.ndarray:
        d = self.dim_a * self.dim_b
        rho = np.zeros((d, d), dtype=complex)
        for w, form in self.ancilla:
            v = form.state()
            rho += w * np.outer(v, v.conj())
        return rho

    @property
    def deterministic(self) -> bool:
        """True when ``Σ_η Π^{Aa}_η = I`` and every receiver operation is trace preserving."""
        da = self.N * self.dim_a
        pi_sum = sum(o.Pi_Aa for o in self.outcomes)
        eq = self.tol.eps_eq
        if max_abs_diff(pi_sum, np.eye(da)) > eq:
            return False
        eye_b = np.eye(self.N * self.dim_b)
        return all(
            max_abs_diff(o.Pi_Bb, eye_b) <= eq and (o.F_Bb is None or is_unitary(o.F_Bb, eq))
            for o in self.outcomes
        )


def _blocks(op: np.ndarray, n: int, d: int, basis: np.ndarray) -> np.ndarray:
    """Blocks ``⟨l| op |basis_j⟩`` on the ancilla factor, shape ``(d, d, n, n)``."""
    t = op.reshape(n, d, n, d)
    t = np.einsum("xlyk,kj->ljxy", t, basis)
    return t


def blocks_A(res: ControlResources, eta: int, component: int = 0) -> np.ndarray:
    """Sender blocks ``A^η_{l,j}`` indexed as ``out[l, j]`` (each N×N)."""
    if not 0 <= eta < len(res.outcomes):
        raise IndexError(f"outcome {eta} out of range")
    form = res.ancilla[component][1]
    return _blocks(res.outcomes[eta].L_Aa, res.N, res.dim_a, form.basis_a)


def blocks_B(res: ControlResources, eta: int, component: int = 0) -> np.ndarray:
    """Receiver blocks ``B^η_{k,j}`` indexed as ``out[k, j]`` (each N×N)."""
    if not 0 <= eta < len(res.outcomes):
        raise IndexError(f"outcome {eta} out of range")
    form = res.ancilla[component][1]
    return _blocks(res.outcomes[eta].L_Bb, res.N, res.dim_b, form.basis_b)


def unitary_blocks(op: np.ndarray, n: int, d: int) -> np.ndarray:
    """Computational-basis blocks ``⟨i|op|j⟩`` (the a_{i,j}, α_{i,j} of a local operator)."""
    return _blocks(as_matrix(op), n, d, np.eye(d))


def _check_dims(ch: Channel, res: ControlResources):
    if ch.dim != res.N:
        raise DimensionError(f"channel dimension {ch.dim} does not match resources N={res.N}")


def modified_channel(ch: Channel, res: ControlResources) -> Channel:
    """Kraus set ``Ẽ_{η,i,k,l} = Σ_j μ_j B^η_{k,j} E_i A^η_{l,j}`` of the controlled channel."""
    _check_dims(ch, res)
    ops = []
    for c, (w, form) in enumerate(res.ancilla):
        mu = form.coefficients
        r = len(mu)
        for eta in range(len(res.outcomes)):
            a = blocks_A(res, eta, c)[:, :r]
            b = blocks_B(res, eta, c)[:, :r]
            # (k, l, i) -> Σ_j μ_j B_{k,j} E_i A_{l,j}
            t = np.einsum("j,kjxy,iyz,ljzw->klixw", mu, b, ch.kraus, a).reshape(-1, res.N, res.N)
            ops.append(np.sqrt(w) * t)
    return Channel(np.concatenate(ops), tol=ch.tol)


@dataclass(frozen=True, eq=False)
class LambdaMap:
    """Kraus operators ``Λ`` acting on Choi states on ``H_B ⊗ H_A``.

    ``labels[i]`` is ``(component, η, k, l)`` for ``kraus[i]``.
    """

    kraus: np.ndarray
    labels: tuple = ()

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    def __len__(self):
        return self.kraus.shape[0]

    def kraus_sum(self) -> np.ndarray:
        return np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)


def lambda_map(res: ControlResources) -> LambdaMap:
    """``Λ^η_{k,l} = Σ_i μ_i B^η_{k,i} ⊗ (A^η_{l,i})ᵀ`` for every outcome and mixture component."""
    n = res.N
    ops, labels = [], []
    for c, (w, form) in enumerate(res.ancilla):
        mu = form.coefficients
        r = len(mu)
        for eta in range(len(res.outcomes)):
            a = blocks_A(res, eta, c)[:, :r]
            b = blocks_B(res, eta, c)[:, :r]
            # kron(B, Aᵀ)[(x, z), (y, w)] = B[x, y] · A[w, z]
            t = np.einsum("i,kixy,liwz->klxzyw", mu, b, a).reshape(res.dim_b, res.dim_a, n * n, n * n)
            for k in range(res.dim_b):
                for l in range(res.dim_a):
                    ops.append(np.sqrt(w) * t[k, l])
                    labels.append((c, eta, k, l))
    return LambdaMap(np.array(ops), tuple(labels))


def apply_lambda(lm: LambdaMap, R: ChoiState) -> ChoiState:
    if R.matrix.shape[0] != lm.dim:
        raise DimensionError(f"Choi dimension {R.matrix.shape[0]} does not match map dimension {lm.dim}")
    out = np.einsum("kij,jl,kml->im", lm.kraus, R.matrix, lm.kraus.conj())
    return ChoiState(out, tol=R.tol)


@dataclass(frozen=True)
class TraceCharacter:
    kind: str  # "preserving" | "decreasing" | "increasing"
    kraus_sum: np.ndarray
    min_eigenvalue: float
    max_eigenvalue: float
    deviation: float


def trace_character(lm: LambdaMap, tol: Tolerances = DEFAULT_TOL) -> TraceCharacter:
    """Classify ``S = Σ Λ†Λ`` against the identity; ``S`` and its extreme eigenvalues are the witness."""
    s = lm.kraus_sum()
    vals, _ = eigh(s, tol)
    dev = max_abs_diff(s, np.eye(lm.dim))
    if dev <= tol.eps_tp:
        kind = "preserving"
    elif vals[0] > 1 + tol.eps_tp:
        kind = "increasing"
    else:
        kind = "decreasing"
    return TraceCharacter(kind, s, float(vals[-1]), float(vals[0]), dev)


@dataclass(frozen=True)
class RelationCheck:
    name: str
    holds: bool
    max_violation: float


@dataclass(frozen=True)
class RelationReport:
    checks: tuple
    deterministic: bool

    def __getitem__(self, name: str) -> RelationCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def _delta_violation(blocks_fn, d: int, n: int) -> float:
    worst = 0.0
    eye = np.eye(n)
    for i in range(d):
        for j in range(d):
            target = eye if i == j else np.zeros((n, n))
            worst = max(worst, max_abs_diff(blocks_fn(i, j), target))
    return worst


def check_resource_relations(res: ControlResources, component: int = 0) -> RelationReport:
    """Evaluate the algebraic relations obeyed by the block operators.

    Relations, for each outcome and both sides unless noted:

    * ``projector``: α_{i,j} = α_{j,i}† and α_{i,j} = Σ_k α_{i,k} α_{k,j}
    * ``unitarity``: Σ_k a_{i,k} a_{j,k}† = Σ_k a_{k,i}† a_{k,j} = δ_ij I
    * ``partial_transpose_unitarity``: Σ_k a_{i,k}† a_{j,k} = Σ_k a_{k,i} a_{k,j}† = δ_ij I.
      This only holds for special unitaries (e.g. products ``V ⊗ W``), so it
      is reported, never required.
    * ``factorization``: A_{i,j} = Σ_k α_{i,k} a_{k,j} (sender side, computational basis)
    * ``complete_measurement`` (sender, summed over η): Σ_η Σ_k A_{i,k} A_{j,k}† = δ_ij I
    * ``bistochastic`` (sender, summed over η): Σ_η Σ_k A_{k,i} A_{k,j}† = δ_ij I
    """
    tol = res.tol
    n = res.N
    eq = tol.eps_eq
    checks = []

    proj_v = 0.0
    uni_v = 0.0
    pt_v = 0.0
    fact_v = 0.0
    for o in res.outcomes:
        for op_pi, op_u, d in ((o.Pi_Aa, o.U_Aa, res.dim_a), (o.Pi_Bb, o.U_Bb, res.dim_b)):
            al = unitary_blocks(op_pi, n, d)
            u = unitary_blocks(op_u, n, d)
            for i in range(d):
                for j in range(d):
                    proj_v = max(proj_v, max_abs_diff(al[i, j], dagger(al[j, i])))
                    proj_v = max(proj_v, max_abs_diff(al[i, j], sum(al[i, k] @ al[k, j] for k in range(d))))
            uni_v = max(
                uni_v,
                _delta_violation(lambda i, j: sum(u[i, k] @ dagger(u[j, k]) for k in range(d)), d, n),
                _delta_violation(lambda i, j: sum(dagger(u[k, i]) @ u[k, j] for k in range(d)), d, n),
            )
            pt_v = max(
                pt_v,
                _delta_violation(lambda i, j: sum(dagger(u[i, k]) @ u[j, k] for k in range(d)), d, n),
                _delta_violation(lambda i, j: sum(u[k, i] @ dagger(u[k, j]) for k in range(d)), d, n),
            )
        al = unitary_blocks(o.Pi_Aa, n, res.dim_a)
        u = unitary_blocks(o.U_Aa, n, res.dim_a)
        big = unitary_blocks(o.L_Aa, n, res.dim_a)
        for i in range(res.dim_a):
            for j in range(res.dim_a):
                fact_v = max(fact_v, max_abs_diff(big[i, j], sum(al[i, k] @ u[k, j] for k in range(res.dim_a))))

    checks.append(RelationCheck("projector", proj_v <= eq, proj_v))
    checks.append(RelationCheck("unitarity", uni_v <= eq, uni_v))
    checks.append(RelationCheck("partial_transpose_unitarity", pt_v <= eq, pt_v))
    checks.append(RelationCheck("factorization", fact_v <= eq, fact_v))

    da = res.dim_a
    all_a = [blocks_A(res, eta, component) for eta in range(len(res.outcomes))]
    meas_v = _delta_violation(
        lambda i, j: sum(a[i, k] @ dagger(a[j, k]) for a in all_a for k in range(da)), da, n
    )
    bist_v = _delta_violation(
        lambda i, j: sum(a[k, i] @ dagger(a[k, j]) for a in all_a for k in range(da)), da, n
    )
    checks.append(RelationCheck("complete_measurement", meas_v <= eq, meas_v))
    checks.append(RelationCheck("bistochastic", bist_v <= eq, bist_v))
    return RelationReport(tuple(checks), res.deterministic)


def separable_composition(weights: Sequence[float], eps_A: Sequence[Channel], eps_B: Sequence[Channel], ch: Channel) -> Channel:
    """Convex mixture ``Σ_i p_i ε^B_i ∘ ε ∘ ε^A_i`` of classically correlated sandwiches."""
    weights = np.asarray(weights, dtype=float)
    if not (len(weights) == len(eps_A) == len(eps_B)) or len(weights) == 0:
        raise ResourceError("weights and component channel lists must have equal nonzero length")
    if np.any(weights < 0) or abs(weights.sum() - 1) > DEFAULT_TOL.eps_eq:
        raise ResourceError("weights must be nonnegative and sum to 1")
    for c in list(eps_A) + list(eps_B):
        if not c.trace_preserving:
            raise ChannelError("separable components must be trace preserving")
        if c.dim != ch.dim:
            raise DimensionError("component dimension mismatch")
    ops = [np.sqrt(w) * compose(b, ch, a).kraus for w, a, b in zip(weights, eps_A, eps_B) if w > 0]
    return Channel(np.concatenate(ops), tol=ch.tol)


def trivial_resources(N: int) -> ControlResources:
    """One-dimensional ancilla and identity local operations."""
    return ControlResources.from_schmidt(N, [1.0], [outcome(dim_Aa=N, dim_Bb=N)])


def local_unitary_resources(U_A, U_B) -> ControlResources:
    """Sender applies ``U_A`` before the channel, receiver ``U_B`` after, no ancilla."""
    U_A = as_matrix(U_A)
    n = U_A.shape[0]
    return ControlResources.from_schmidt(n, [1.0], [outcome(U_Aa=U_A, U_Bb=U_B, dim_Aa=n, dim_Bb=n)])


def simulate_modified_channel(ch: Channel, res: ControlResources, rho) -> np.ndarray:
    """Direct density-matrix simulation of the controlled channel on ``rho``.

    Builds ``ρ ⊗ ρ^{ab}`` on ``A ⊗ a ⊗ b``, applies ``L_Aa``, the channel on A,
    ``L_Bb`` on ``B ⊗ b``, traces out ``a`` and ``b`` and sums over outcomes.
    Independent of the block-operator route.
    """
    n, da, db = res.N, res.dim_a, res.dim_b
    rho = as_matrix(rho)
    sigma = np.kron(rho, res.ancilla_density())
    out = np.zeros((n, n), dtype=complex)
    eye_a, eye_b = np.eye(da), np.eye(db)
    for o in res.outcomes:
        la = np.kron(o.L_Aa, eye_b)  # on A ⊗ a ⊗ b
        s = la @ sigma @ dagger(la)
        s = sum(np.kron(np.kron(e, eye_a), eye_b) @ s @ dagger(np.kron(np.kron(e, eye_a), eye_b)) for e in ch.kraus)
        # L_Bb acts on factors (B, b) = (0, 2): conjugate by swapping a and b
        lb = o.L_Bb.reshape(n, db, n, db)
        lb_full = np.einsum("xbyc,ad->xabydc", lb, eye_a).reshape(n * da * db, n * da * db)
        s = lb_full @ s @ dagger(lb_full)
        out += np.trace(s.reshape(n, da * db, n, da * db), axis1=1, axis2=3)
    return out


def resources_from_json(desc: dict, N: int | None = None, tol: Tolerances = DEFAULT_TOL) -> ControlResources:
    """Read a resource descriptor.

    ``{"schmidt": [...]}`` or ``{"ancilla": vector, "dim_a": .., "dim_b": ..}``
    plus ``"outcomes": [{"U_Aa", "Pi_Aa", "U_Bb", "Pi_Bb", "F_Bb"}, ...]``
    with matrices as nested ``[re, im]`` pairs; omitted operators are
    identities. ``{"preset": "qt"}`` selects teleportation resources and
    ``{"preset": "trivial"}`` the do-nothing controls.
    """
    from .channels import matrix_from_json, vector_from_json

    if not isinstance(desc, dict):
        raise ResourceError("resource descriptor must be an object")
    N = int(desc.get("N", N if N is not None else 2))
    preset = desc.get("preset")
    if preset == "qt":
        from .protocols import qt_resources

        return qt_resources(N, desc.get("schmidt"), tol=tol)
    if preset == "trivial":
        return trivial_resources(N)
    if preset is not None:
        raise ResourceError(f"unknown resource preset {preset!r}")

    if "schmidt" in desc:
        dim_a = dim_b = len(desc["schmidt"])
    elif "ancilla" in desc:
        psi = vector_from_json(desc["ancilla"])
        dim_a = int(desc.get("dim_a", round(np.sqrt(psi.size))))
        dim_b = int(desc.get("dim_b", psi.size // dim_a))
    else:
        raise ResourceError("resource descriptor needs 'schmidt', 'ancilla' or 'preset'")
    raw = desc.get("outcomes") or [{}]
    outs = []
    for o in raw:
        mats = {k: matrix_from_json(o[k]) for k in ("U_Aa", "Pi_Aa", "U_Bb", "Pi_Bb", "F_Bb") if k in o}
        outs.append(outcome(**mats, dim_Aa=N * dim_a, dim_Bb=N * dim_b, label=str(o.get("label", ""))))
    if "schmidt" in desc:
        return ControlResources.from_schmidt(N, desc["schmidt"], outs, tol)
    return ControlResources.from_state(N, psi, dim_a, dim_b, outs, tol)
