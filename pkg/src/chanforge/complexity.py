"""Channel complexity and the Choi-state fidelity figure of merit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .channels import Channel, ChannelFamily, ChoiState, choi_of, max_entangled
from .control import ControlResources, apply_lambda, lambda_map
from .matcore import DEFAULT_TOL, Tolerances, eigh, numerical_rank


@dataclass(frozen=True)
class SupportSubspace:
    dim_total: int
    basis: np.ndarray  # orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def support(R: ChoiState, tol: Tolerances = DEFAULT_TOL) -> SupportSubspace:
    vals, vecs = eigh(R.matrix, tol)
    top = vals[0]
    keep = vals > tol.eps_rank * top if top > 0 else np.zeros(vals.shape, dtype=bool)
    return SupportSubspace(R.matrix.shape[0], vecs[:, keep])


def _is_ideal_support(sub: SupportSubspace, tol: Tolerances) -> bool:
    if sub.dim != 1:
        return False
    psi0 = max_entangled(int(round(np.sqrt(sub.dim_total))))
    return 1 - abs(np.vdot(psi0, sub.basis[:, 0])) <= tol.eps_eq


def complexity(family, tol: Tolerances = DEFAULT_TOL) -> int:
    """Dimension of the span of all member Choi supports.

    Accepts a ``ChannelFamily``, a single ``Channel``/``ChoiState`` or any
    iterable of them. Returns 0 when every support is the line through ``|ψ₀⟩``.
    """
    if isinstance(family, (Channel, ChoiState)):
        members = [family]
    elif isinstance(family, ChannelFamily):
        members = list(family.members)
    else:
        members = list(family)
    chois = [m if isinstance(m, ChoiState) else choi_of(m) for m in members]
    subs = [support(R, tol) for R in chois]
    if all(_is_ideal_support(s, tol) for s in subs):
        return 0
    stacked = np.concatenate([s.basis for s in subs], axis=1)
    if stacked.shape[1] == 0:
        return 0
    gram = stacked @ stacked.conj().T
    return numerical_rank(gram, tol)


def choi_rank(R: ChoiState, tol: Tolerances = DEFAULT_TOL) -> int:
    return numerical_rank(R.matrix, tol)


def cj_fidelity(R: ChoiState) -> float:
    """Overlap ``⟨ψ₀|R|ψ₀⟩`` between a Choi state and the ideal-channel Bell state."""
    psi0 = max_entangled(R.dim)
    return float(np.vdot(psi0, R.matrix @ psi0).real)


@dataclass(frozen=True)
class OptimizationResult:
    params: np.ndarray
    fidelity: float
    evaluations: int


class _BudgetExhausted(Exception):
    pass


def optimize_fidelity(
    ch: Channel,
    parametrization: Callable[[np.ndarray], ControlResources],
    x0: Sequence[float],
    budget: int,
    initial_step: float = 0.25,
) -> OptimizationResult:
    """Maximize the Choi fidelity of the controlled channel over real parameters.

    Nelder-Mead simplex search; at most ``budget`` objective evaluations are
    spent and the best point ever evaluated is returned, so the result is
    monotone in the budget. A zero budget returns ``x0`` unchanged.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.ndim != 1 or x0.size == 0:
        raise ValueError("x0 must be a nonempty 1-d parameter vector")
    R = choi_of(ch)

    def fidelity(x):
        res = parametrization(np.asarray(x, dtype=float))
        if res.N != ch.dim:
            raise ValueError(f"parametrization returns N={res.N}, channel has N={ch.dim}")
        return cj_fidelity(apply_lambda(lambda_map(res), R))

    if budget <= 0:
        return OptimizationResult(x0.copy(), fidelity(x0), 0)

    best = {"x": x0.copy(), "f": -np.inf, "n": 0}

    def objective(x):
        if best["n"] >= budget:
            raise _BudgetExhausted
        best["n"] += 1
        f = fidelity(x)
        if f > best["f"]:
            best["x"], best["f"] = np.array(x, dtype=float), f
        return -f

    simplex = np.vstack([x0] + [x0 + initial_step * e for e in np.eye(x0.size)])
    try:
        minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"initial_simplex": simplex, "maxfev": budget, "xatol": 1e-12, "fatol": 1e-15},
        )
    except _BudgetExhausted:
        pass
    return OptimizationResult(best["x"], float(best["f"]), best["n"])
