"""Channels in operator-sum form and their Choi-Jamiolkowski states.

The Choi state of a channel ``ε`` on ``H_A`` is ``(ε ⊗ I)[Ψ₀]`` with the
output factor B first, i.e. it lives on ``H_B ⊗ H_A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DimensionError,
    NotPositiveError,
    Tolerances,
    as_matrix,
    dagger,
    eigh,
    is_hermitian,
    is_unitary,
    max_abs_diff,
    random_unitary,
)


class ChannelError(ValueError):
    """A channel or Choi state fails validation."""


def _as_kraus_stack(kraus) -> np.ndarray:
    if isinstance(kraus, np.ndarray) and kraus.ndim == 3:
        ops = kraus.astype(complex)
    else:
        ops = np.array([as_matrix(k) for k in kraus], dtype=complex)
    if ops.ndim != 3 or ops.shape[0] == 0:
        raise ChannelError("a channel needs a nonempty list of Kraus matrices")
    return ops


@dataclass(frozen=True, eq=False)
class Channel:
    """Completely positive map ``ρ ↦ Σ E ρ E†`` on an N-level system.

    Trace-decreasing maps are allowed; trace-increasing ones are rejected.
    """

    kraus: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        ops = _as_kraus_stack(self.kraus)
        if ops.shape[1] != ops.shape[2]:
            raise ChannelError(f"non-square Kraus operators {ops.shape[1:]} are not supported")
        ops.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        top = np.linalg.eigvalsh(self.kraus_sum())[-1]
        if top > 1 + self.tol.eps_tp:
            raise ChannelError(f"Σ E†E has eigenvalue {top:.6g} > 1: not a valid channel")

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    def __len__(self) -> int:
        return self.kraus.shape[0]

    def kraus_sum(self) -> np.ndarray:
        return np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)

    @property
    def trace_preserving(self) -> bool:
        return is_trace_preserving(self, self.tol)

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)


@dataclass(frozen=True, eq=False)
class ChoiState:
    """Positive operator ``R`` on ``H_B ⊗ H_A`` with ``Tr R ≤ 1``."""

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        m = as_matrix(self.matrix).copy()
        d = int(round(np.sqrt(m.shape[0])))
        if m.shape[0] != m.shape[1] or d * d != m.shape[0]:
            raise ChannelError(f"Choi matrix shape {m.shape} is not N²×N²")
        if not is_hermitian(m, self.tol.eps_herm):
            raise ChannelError("Choi matrix is not Hermitian")
        vals = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
        if vals.size and vals[0] < -self.tol.eps_eq * max(1.0, abs(vals[-1])):
            raise ChannelError(f"Choi matrix has negative eigenvalue {vals[0]:.3e}")
        if np.trace(m).real > 1 + self.tol.eps_tp:
            raise ChannelError(f"Choi trace {np.trace(m).real:.6g} exceeds 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


@dataclass(frozen=True, eq=False)
class ChannelFamily:
    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ChannelError("a channel family must be nonempty")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise ChannelError(f"family members have different dimensions {sorted(dims)}")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def apply(ch: Channel, rho) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape != (ch.dim, ch.dim):
        raise DimensionError(f"state shape {rho.shape} does not match channel dimension {ch.dim}")
    return np.einsum("kij,jl,kml->im", ch.kraus, rho, ch.kraus.conj())


def is_trace_preserving(ch: Channel, tol: Tolerances = DEFAULT_TOL) -> bool:
    return max_abs_diff(ch.kraus_sum(), np.eye(ch.dim)) <= tol.eps_tp


def max_entangled(dim: int) -> np.ndarray:
    """``|ψ₀⟩ = Σ_i |i⟩|i⟩ / √N`` as a vector of length N²."""
    return np.eye(dim, dtype=complex).ravel() / np.sqrt(dim)


def choi_matrix(kraus) -> np.ndarray:
    ops = _as_kraus_stack(kraus)
    n = ops.shape[2]
    # (E ⊗ I)|ψ₀⟩ reshaped to (b, a) is E / √N
    vecs = ops.reshape(ops.shape[0], -1) / np.sqrt(n)
    return vecs.T @ vecs.conj()


def choi_of(ch: Channel) -> ChoiState:
    return ChoiState(choi_matrix(ch.kraus), tol=ch.tol)


def kraus_of(choi: ChoiState, tol: Tolerances = DEFAULT_TOL) -> Channel:
    """Canonical Kraus set from the eigendecomposition of a Choi state."""
    n = choi.dim
    vals, vecs = eigh(choi.matrix, tol)
    if vals.size and vals[-1] < -tol.eps_eq * max(1.0, abs(vals[0])):
        raise NotPositiveError(f"negative Choi eigenvalue {vals[-1]:.3e}")
    top = vals[0] if vals.size else 0.0
    keep = vals > tol.eps_rank * top if top > 0 else np.zeros_like(vals, dtype=bool)
    if not keep.any():
        return Channel(np.zeros((1, n, n), dtype=complex), tol=tol)
    ops = [np.sqrt(n * r) * vecs[:, j].reshape(n, n) for j, (r, k) in enumerate(zip(vals, keep)) if k]
    return Channel(np.array(ops), tol=tol)


def identity_channel(dim: int) -> Channel:
    return Channel(np.eye(dim, dtype=complex)[None])


def unitary_channel(u) -> Channel:
    u = as_matrix(u)
    if not is_unitary(u):
        raise ChannelError("unitary channel needs a unitary matrix")
    return Channel(u[None])


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ChannelError(f"{name}={value} outside [0, 1]")
    return value


def bit_flip(p: float) -> Channel:
    p = _check_prob("p", p)
    return Channel([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * SIGMA_X])


def phase_flip(p: float) -> Channel:
    p = _check_prob("p", p)
    return Channel([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * SIGMA_Z])


def depolarizing(p: float) -> Channel:
    p = _check_prob("p", p)
    return Channel(
        [
            np.sqrt(1 - 3 * p / 4) * np.eye(2),
            np.sqrt(p / 4) * SIGMA_X,
            np.sqrt(p / 4) * SIGMA_Y,
            np.sqrt(p / 4) * SIGMA_Z,
        ]
    )


def amplitude_damping(gamma: float) -> Channel:
    g = _check_prob("gamma", gamma)
    return Channel([[[1, 0], [0, np.sqrt(1 - g)]], [[0, np.sqrt(g)], [0, 0]]])


def phase_damping(gamma: float) -> Channel:
    g = _check_prob("gamma", gamma)
    return Channel([[[1, 0], [0, np.sqrt(1 - g)]], [[0, 0], [0, np.sqrt(g)]]])


def standard_channel(kind: str, **params) -> Channel:
    """Build a member of the standard qubit channel zoo by name.

    ``kind`` is one of ``bit_flip``, ``phase_flip``, ``depolarizing`` (take
    ``p``), ``amplitude_damping``, ``phase_damping`` (take ``gamma``),
    ``unitary`` (takes ``U``) or ``identity`` (takes ``N``, default 2).
    """
    if kind in ("bit_flip", "phase_flip", "depolarizing"):
        return {"bit_flip": bit_flip, "phase_flip": phase_flip, "depolarizing": depolarizing}[kind](
            params["p"]
        )
    if kind in ("amplitude_damping", "phase_damping"):
        fn = amplitude_damping if kind == "amplitude_damping" else phase_damping
        return fn(params["gamma"])
    if kind == "unitary":
        return unitary_channel(params["U"])
    if kind == "identity":
        return identity_channel(int(params.get("N", 2)))
    raise ChannelError(f"unknown channel kind {kind!r}")


def bell_state(dim: int, eta: int) -> np.ndarray:
    """Generalized Bell vector ``|ψ_η⟩`` with ``η = n·N + m``."""
    if not 0 <= eta < dim * dim:
        raise ChannelError(f"Bell index {eta} outside [0, {dim * dim})")
    n, m = divmod(eta, dim)
    v = np.zeros(dim * dim, dtype=complex)
    for k in range(dim):
        v[k * dim + (k + m) % dim] = np.exp(2j * np.pi * k * n / dim)
    return v / np.sqrt(dim)


def random_channel(dim: int, n_kraus: int, rng: np.random.Generator) -> Channel:
    """Trace-preserving channel from a Haar-random isometry ``H → H ⊗ C^K``."""
    v = random_unitary(dim * n_kraus, rng)[:, :dim]
    ops = v.reshape(n_kraus, dim, dim)
    return Channel(ops)


# JSON descriptors -----------------------------------------------------------


def matrix_from_json(data) -> np.ndarray:
    """Nested row-major list of ``[re, im]`` pairs (or bare reals) to a matrix."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ChannelError(f"cannot read matrix of shape {arr.shape}")


def vector_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and arr.shape[-1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim == 1:
        return arr.astype(complex)
    raise ChannelError(f"cannot read vector of shape {arr.shape}")


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def channel_from_json(desc: dict) -> Channel:
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ChannelError("channel descriptor must be an object with a 'kind'")
    kind = desc["kind"]
    if kind in ("bit_flip", "phase_flip", "depolarizing"):
        if "p" not in desc:
            raise ChannelError(f"{kind} descriptor needs 'p'")
        return standard_channel(kind, p=desc["p"])
    if kind in ("amplitude_damping", "phase_damping"):
        if "gamma" not in desc:
            raise ChannelError(f"{kind} descriptor needs 'gamma'")
        return standard_channel(kind, gamma=desc["gamma"])
    if kind == "identity":
        return identity_channel(int(desc.get("N", 2)))
    if kind in ("unitary", "kraus"):
        mats = desc.get("matrices")
        if not mats:
            raise ChannelError(f"{kind} descriptor needs 'matrices'")
        ops = [matrix_from_json(m) for m in mats]
        if kind == "unitary":
            if len(ops) != 1:
                raise ChannelError("unitary descriptor takes exactly one matrix")
            return unitary_channel(ops[0])
        return Channel(ops)
    raise ChannelError(f"unknown channel kind {kind!r}")


def family_from_json(items: Iterable[dict]) -> ChannelFamily:
    return ChannelFamily(tuple(channel_from_json(d) for d in items))


def describe(desc: dict) -> str:
    kind = desc.get("kind", "?")
    params = ", ".join(f"{k}={desc[k]}" for k in ("p", "gamma", "N") if k in desc)
    return f"{kind}({params})" if params else kind


def same_action(a: Channel, b: Channel, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Compare two channels through their Choi matrices."""
    if a.dim != b.dim:
        return False
    return max_abs_diff(choi_matrix(a.kraus), choi_matrix(b.kraus)) <= tol.eps_eq


def compose(*channels: Sequence[Channel]) -> Channel:
    """``compose(f, g)`` applies ``g`` first, then ``f``."""
    ops = channels[-1].kraus
    for ch in reversed(channels[:-1]):
        ops = np.einsum("aij,bjk->abik", ch.kraus, ops).reshape(-1, ch.dim, ch.dim)
    return Channel(ops)
