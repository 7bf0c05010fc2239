"""Concrete control protocols built on ``ControlResources``.

Covers teleportation with a partially entangled ancilla and correction of
known unitary errors or bit flips. The 3-qubit phase-flip code is included
for comparison with coded transmission.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    Channel,
    ChoiState,
    bell_state,
    choi_of,
    random_channel,
)
from .complexity import cj_fidelity, complexity
from .control import (
    ControlResources,
    LambdaMap,
    ResourceError,
    apply_lambda,
    lambda_map,
    local_unitary_resources,
    modified_channel,
    outcome,
    trace_character,
)
from .matcore import (
    DEFAULT_TOL,
    SIGMA_X,
    Tolerances,
    as_matrix,
    dagger,
    is_unitary,
    ket,
    projector,
    swap_operator,
    tensor,
)


@dataclass(frozen=True, eq=False)
class ProtocolOutcome:
    """Result of running a protocol on a channel.

    ``channel_after`` and ``choi_after`` describe the successful branch and
    are not renormalized: their trace is the success probability.
    """

    channel_after: Channel
    choi_after: ChoiState
    success_prob: float
    complexity_before: int
    complexity_after: int
    resources: ControlResources | None = field(default=None, repr=False)
    lambda_map: LambdaMap | None = field(default=None, repr=False)


def _outcome_of(ch: Channel, res: ControlResources, tol: Tolerances) -> ProtocolOutcome:
    after = modified_channel(ch, res)
    lm = lambda_map(res)
    choi_after = apply_lambda(lm, choi_of(ch))
    return ProtocolOutcome(
        channel_after=after,
        choi_after=choi_after,
        success_prob=choi_after.trace,
        complexity_before=complexity(ch, tol),
        complexity_after=complexity(choi_after, tol),
        resources=res,
        lambda_map=lm,
    )


# teleportation -----------------------------------------------------------


def _check_schmidt(mu, n: int | None = None) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise ResourceError("Schmidt vector must be a nonempty 1-d sequence")
    if n is not None and mu.size != n:
        raise ResourceError(f"expected {n} Schmidt coefficients, got {mu.size}")
    if np.any(mu < 0) or abs(np.sum(mu**2) - 1) > 1e-9:
        raise ResourceError("Schmidt coefficients must be nonnegative with Σμ² = 1")
    return mu


def _qt_outcomes(N: int) -> list:
    omega = np.exp(2j * np.pi / N)
    swap = swap_operator(N, N)
    eye = np.eye(N)
    outs = []
    for eta in range(N * N):
        n, m = divmod(eta, N)
        shift = sum(omega ** (k * n) * np.outer(ket(k, N), ket((k + m) % N, N)) for k in range(N))
        outs.append(
            outcome(
                Pi_Aa=projector(bell_state(N, eta)),
                U_Bb=swap @ np.kron(eye, shift),
                dim_Aa=N * N,
                dim_Bb=N * N,
                label=f"eta={eta}",
            )
        )
    return outs


def qt_resources(N: int, schmidt=None, *, ancilla_mixture=None, tol: Tolerances = DEFAULT_TOL) -> ControlResources:
    """Teleportation: Bell measurement on ``A⊗a``, outcome-dependent correction on ``B⊗b``.

    ``schmidt`` gives a pure ancilla ``Σ μ_k |k⟩|k⟩`` (uniform by default);
    ``ancilla_mixture`` a list of ``(weight, state vector)`` on ``a⊗b``.
    """
    outs = _qt_outcomes(N)
    if ancilla_mixture is not None:
        return ControlResources.from_mixture(N, ancilla_mixture, N, N, outs, tol)
    mu = np.full(N, 1 / np.sqrt(N)) if schmidt is None else _check_schmidt(schmidt, N)
    return ControlResources.from_schmidt(N, mu, outs, tol)


def qt_channel(schmidt) -> Channel:
    """Closed-form teleportation channel: ``Ẽ_j |l⟩ = μ_{(l+j) mod N} |l⟩``."""
    mu = _check_schmidt(schmidt)
    n = mu.size
    return Channel(np.array([np.diag(np.roll(mu, -j)).astype(complex) for j in range(n)]))


def qt_kraus_unreduced(schmidt) -> np.ndarray:
    """All N² teleportation Kraus operators ``μ_{(l+η) mod N}/√N`` before merging periodic ones."""
    mu = _check_schmidt(schmidt)
    n = mu.size
    return np.array([np.diag(np.roll(mu, -eta % n)).astype(complex) / np.sqrt(n) for eta in range(n * n)])


def p_mu(mu: float) -> float:
    """Phase-flip probability of qubit teleportation with Schmidt coefficient ``mu``."""
    mu = float(mu)
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu={mu} outside [0, 1]")
    return float(0.5 - mu * np.sqrt(1 - mu * mu))


# unitary shift -----------------------------------------------------------


def unitary_shift_correction(U_eps, U1=None, tol: Tolerances = DEFAULT_TOL) -> ProtocolOutcome:
    """Undo a known unitary error with ``U₂ U_ε U₁ = I``; ``U₂`` is chosen from ``U₁``."""
    U_eps = as_matrix(U_eps)
    if not is_unitary(U_eps, tol.eps_eq):
        raise ValueError("U_eps must be unitary")
    n = U_eps.shape[0]
    U1 = np.eye(n, dtype=complex) if U1 is None else as_matrix(U1)
    if not is_unitary(U1, tol.eps_eq):
        raise ValueError("U1 must be unitary")
    U2 = dagger(U_eps @ U1)
    res = local_unitary_resources(U1, U2)
    return _outcome_of(Channel(U_eps[None]), res, tol)


# bit-flip correction -----------------------------------------------------

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def filter_gamma(mu: float) -> float:
    return mu / np.sqrt(1 - mu * mu)


def _bitflip_outcomes(mu: float, success: bool = True) -> list:
    g = filter_gamma(mu)
    eye2 = np.eye(2)
    f_s = np.diag([1.0, g])
    f_s2 = np.diag([g, 1.0])
    if not success:
        f_s = np.sqrt(np.clip(eye2 - f_s @ f_s, 0, None))
        f_s2 = np.sqrt(np.clip(eye2 - f_s2 @ f_s2, 0, None))
    # receiver parity projectors on B⊗b
    parity = [
        projector(tensor(ket(0, 2), ket(0, 2))) + projector(tensor(ket(1, 2), ket(1, 2))),
        projector(tensor(ket(0, 2), ket(1, 2))) + projector(tensor(ket(1, 2), ket(0, 2))),
    ]
    # (η, ξ) -> (flip first?, filter)
    strategy = {(0, 0): (False, f_s), (0, 1): (True, f_s), (1, 0): (True, f_s2), (1, 1): (False, f_s2)}
    outs = []
    for eta in (0, 1):
        pi_a = np.kron(eye2, projector(ket(eta, 2)))
        for xi in (0, 1):
            flip, filt = strategy[(eta, xi)]
            u_b = np.kron(SIGMA_X if flip else eye2, eye2) @ CNOT
            outs.append(
                outcome(
                    U_Aa=CNOT,
                    Pi_Aa=pi_a,
                    U_Bb=u_b,
                    Pi_Bb=u_b @ parity[xi] @ dagger(u_b),
                    F_Bb=np.kron(filt, eye2),
                    dim_Aa=4,
                    dim_Bb=4,
                    label=f"eta={eta},xi={xi},{'success' if success else 'fail'}",
                )
            )
    return outs


def _check_bitflip_mu(mu: float) -> float:
    mu = float(mu)
    if not 0.0 <= mu <= 1 / np.sqrt(2) + 1e-12:
        raise ValueError(f"mu={mu} outside [0, 1/√2]")
    return min(mu, 1 / np.sqrt(2))


def bitflip_resources(mu: float, include_failure: bool = False) -> ControlResources:
    """Resources of the probabilistic bit-flip correction.

    The ancilla is ``μ|00⟩ + √(1−μ²)|11⟩``. Sender: CNOT (A controls a) then
    measurement of ``a``. Receiver: parity measurement on ``B⊗b``, CNOT (B
    controls b), an optional ``σ_x`` and a filter, chosen per outcome pair
    ``(η, ξ)``. Only successful filter branches are included unless
    ``include_failure`` is set.
    """
    mu = _check_bitflip_mu(mu)
    outs = _bitflip_outcomes(mu, success=True)
    if include_failure:
        outs += _bitflip_outcomes(mu, success=False)
    return ControlResources.from_schmidt(2, [mu, np.sqrt(1 - mu * mu)], outs)


def bitflip_correction(mu: float, p: float, tol: Tolerances = DEFAULT_TOL) -> ProtocolOutcome:
    from .channels import bit_flip

    res = bitflip_resources(mu)
    return _outcome_of(bit_flip(p), res, tol)


def bitflip_lambda_closed_form(mu: float) -> dict:
    """The four nonzero Λ operators of the bit-flip protocol, keyed by ``(η, ξ, k, l)``."""
    p0, p1 = projector(ket(0, 2)), projector(ket(1, 2))
    x01 = np.outer(ket(0, 2), ket(1, 2))
    x10 = np.outer(ket(1, 2), ket(0, 2))
    diag = mu * (np.kron(p0, p0) + np.kron(p1, p1))
    off = mu * (np.kron(x01, p0) + np.kron(x10, p1))
    return {(0, 0, 0, 0): diag, (0, 1, 1, 0): off, (1, 0, 0, 1): off, (1, 1, 1, 1): diag}


# 3-qubit phase-flip code -------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def phase_code_encoder() -> np.ndarray:
    """Isometry ``|0⟩ ↦ |+++⟩, |1⟩ ↦ |−−−⟩`` as an 8×2 matrix."""
    plus = _H @ ket(0, 2)
    minus = _H @ ket(1, 2)
    return np.column_stack([tensor(plus, plus, plus), tensor(minus, minus, minus)])


def phase_code_decoder() -> np.ndarray:
    """Kraus operators (2×8) of X-basis majority-vote decoding."""
    h3 = tensor(_H, _H, _H)
    ops = []
    for err in (0b000, 0b100, 0b010, 0b001):
        d = np.zeros((2, 8), dtype=complex)
        for b in (0, 1):
            d[b, (0b111 * b) ^ err] = 1.0
        ops.append(d @ h3)
    return np.array(ops)


def three_copies(ch: Channel) -> np.ndarray:
    return np.array([tensor(a, b, c) for a, b, c in itertools.product(ch.kraus, repeat=3)])


def phase_code_logical_channel(ch: Channel) -> Channel:
    """Logical qubit channel of encode → ``ch`` on every qubit → decode."""
    enc = phase_code_encoder()
    noisy = three_copies(ch)
    dec = phase_code_decoder()
    ops = np.einsum("dij,njk,kl->dnil", dec, noisy, enc).reshape(-1, 2, 2)
    return Channel(ops)


def logical_error_enumerated(p: float) -> float:
    """Probability that majority vote fails, by enumerating all 8 σ_z patterns."""
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=3):
        w = sum(pattern)
        if w >= 2:
            total += p**w * (1 - p) ** (3 - w)
    return total


@dataclass(frozen=True)
class QeccReport:
    """Coded versus uncoded transmission over the same per-qubit channel.

    Decoding failures act on the logical qubit as a bit flip, so a single
    input state can hide them; ``coding_helps`` compares entanglement
    (Choi) fidelities, ``1 − p_L`` versus ``1 − p``.
    """

    mu: float
    p: float
    logical_error_simulated: float
    logical_error_enumerated: float
    logical_error_formula: float
    entanglement_fidelity_coded: float
    entanglement_fidelity_uncoded: float
    state_fidelity_coded: float
    state_fidelity_uncoded: float

    @property
    def coding_helps(self) -> bool:
        return self.entanglement_fidelity_coded > self.entanglement_fidelity_uncoded + 1e-12


# Bloch vector (1, 1, 1)/√3: sensitive to both bit and phase flips
DEFAULT_INPUT = np.array(
    [np.sqrt((1 + 1 / np.sqrt(3)) / 2), np.exp(1j * np.pi / 4) * np.sqrt((1 - 1 / np.sqrt(3)) / 2)]
)


def _state_fidelity(ch: Channel, psi: np.ndarray) -> float:
    out = ch(np.outer(psi, psi.conj()))
    return float(np.vdot(psi, out @ psi).real)


def phase_code_report(ch: Channel, p: float, input_state=None, mu: float = float("nan")) -> QeccReport:
    psi = DEFAULT_INPUT if input_state is None else np.asarray(input_state, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    logical = phase_code_logical_channel(ch)
    f_coded = cj_fidelity(choi_of(logical))
    return QeccReport(
        mu=float(mu),
        p=float(p),
        logical_error_simulated=1 - f_coded,
        logical_error_enumerated=float(logical_error_enumerated(p)),
        logical_error_formula=float(3 * p**2 - 2 * p**3),
        entanglement_fidelity_coded=f_coded,
        entanglement_fidelity_uncoded=cj_fidelity(choi_of(ch)),
        state_fidelity_coded=_state_fidelity(logical, psi),
        state_fidelity_uncoded=_state_fidelity(ch, psi),
    )


def qecc_phase_flip_demo(mu: float, input_state=None) -> QeccReport:
    """Teleport each code qubit with Schmidt coefficient ``mu``, protect with the 3-qubit phase-flip code."""
    mu = float(mu)
    if not 0.0 < mu <= 1 / np.sqrt(2) + 1e-12:
        raise ValueError(f"mu={mu} outside (0, 1/√2]")
    mu = min(mu, 1 / np.sqrt(2))
    ch = qt_channel([mu, np.sqrt(1 - mu * mu)])
    return phase_code_report(ch, p_mu(mu), input_state, mu)


# sufficiency witness ---------------------------------------------------


@dataclass(frozen=True)
class WitnessReport:
    N: int
    seed: int
    complexities_before: tuple
    complexities_after: tuple
    trace_character: str
    max_choi_deviation: float

    @property
    def all_corrected(self) -> bool:
        return all(c == 0 for c in self.complexities_after) and self.trace_character == "preserving"


def theorem1_witness(N: int, trials: int, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> WitnessReport:
    """Map random maximal-complexity channels through teleportation resources.

    Checks sufficiency only: each output must have complexity 0 and the
    induced Choi-level map must be trace preserving.
    """
    rng = np.random.default_rng(seed)
    res = qt_resources(N, tol=tol)
    lm = lambda_map(res)
    psi0 = bell_state(N, 0)
    ideal = np.outer(psi0, psi0.conj())
    before, after, dev = [], [], 0.0
    for _ in range(trials):
        ch = random_channel(N, N * N, rng)
        before.append(complexity(ch, tol))
        R = apply_lambda(lm, choi_of(ch))
        after.append(complexity(R, tol))
        dev = max(dev, float(np.max(np.abs(R.matrix - ideal))))
    return WitnessReport(N, seed, tuple(before), tuple(after), trace_character(lm, tol).kind, dev)
