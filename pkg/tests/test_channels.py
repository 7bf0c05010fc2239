import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanforge.channels import (
    Channel,
    ChannelError,
    ChannelFamily,
    ChoiState,
    apply,
    bell_state,
    channel_from_json,
    choi_matrix,
    choi_of,
    compose,
    describe,
    family_from_json,
    identity_channel,
    is_trace_preserving,
    kraus_of,
    matrix_from_json,
    matrix_to_json,
    max_entangled,
    random_channel,
    same_action,
    standard_channel,
    unitary_channel,
)
from chanforge.matcore import SIGMA_X, SIGMA_Z, ket, projector, random_density_matrix, random_unitary


def choi_by_action(ch):
    """Σ_ij ε(|i><j|) ⊗ |i><j| / N built by applying the channel to matrix units."""
    n = ch.dim
    out = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            unit = np.outer(ket(i, n), ket(j, n))
            out += np.kron(apply(ch, unit), unit)
    return out / n


ZOO = [
    ("bit_flip", {"p": 0.3}),
    ("phase_flip", {"p": 0.2}),
    ("depolarizing", {"p": 0.4}),
    ("amplitude_damping", {"gamma": 0.35}),
    ("phase_damping", {"gamma": 0.6}),
]


@pytest.mark.parametrize("kind,params", ZOO)
def test_zoo_channels_trace_preserving(kind, params):
    ch = standard_channel(kind, **params)
    assert ch.trace_preserving and is_trace_preserving(ch)


@pytest.mark.parametrize("kind,params", ZOO)
def test_choi_matches_action_oracle(kind, params):
    ch = standard_channel(kind, **params)
    assert np.allclose(choi_matrix(ch.kraus), choi_by_action(ch))


@pytest.mark.parametrize("dim,K", [(2, 1), (2, 3), (3, 2), (3, 9)])
def test_choi_matches_action_oracle_random(dim, K, rng):
    ch = random_channel(dim, K, rng)
    assert ch.trace_preserving
    assert np.allclose(choi_of(ch).matrix, choi_by_action(ch))


def test_bit_flip_acts_with_sigma_x():
    rho = projector(ket(0, 2))
    out = apply(standard_channel("bit_flip", p=0.25), rho)
    assert np.allclose(out, np.diag([0.75, 0.25]))


def test_phase_flip_acts_with_sigma_z():
    plus = np.array([1, 1]) / np.sqrt(2)
    out = apply(standard_channel("phase_flip", p=0.25), projector(plus))
    assert np.isclose(out[0, 1], 0.5 * (1 - 2 * 0.25))


def test_depolarizing_contracts_bloch_vector(rng):
    rho = random_density_matrix(2, rng)
    out = apply(standard_channel("depolarizing", p=0.4), rho)
    assert np.allclose(out, 0.6 * rho + 0.4 * np.eye(2) / 2)


def test_amplitude_damping_ground_state_fixed():
    out = apply(standard_channel("amplitude_damping", gamma=0.7), projector(ket(1, 2)))
    assert np.allclose(out, np.diag([0.7, 0.3]))


def test_identity_choi_is_psi0():
    psi0 = max_entangled(3)
    assert np.allclose(choi_of(identity_channel(3)).matrix, projector(psi0))


@pytest.mark.parametrize("dim,K", [(2, 2), (2, 4), (3, 5)])
def test_kraus_roundtrip(dim, K, rng):
    ch = random_channel(dim, K, rng)
    back = kraus_of(choi_of(ch))
    assert len(back) == min(K, dim * dim)
    assert same_action(ch, back)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_bell_basis_orthonormal(dim):
    basis = np.array([bell_state(dim, e) for e in range(dim * dim)]).T
    assert np.allclose(basis.conj().T @ basis, np.eye(dim * dim))
    assert np.allclose(bell_state(dim, 0), max_entangled(dim))


def test_bell_states_from_paulis():
    # (σ ⊗ I)|ψ0> picks out the other Bell vectors up to phase
    psi0 = max_entangled(2)
    x = np.kron(SIGMA_X, np.eye(2)) @ psi0
    z = np.kron(SIGMA_Z, np.eye(2)) @ psi0
    assert np.isclose(abs(np.vdot(bell_state(2, 1), x)), 1)
    assert np.isclose(abs(np.vdot(bell_state(2, 2), z)), 1)


def test_channel_rejects_trace_increasing():
    with pytest.raises(ChannelError):
        Channel([2 * np.eye(2)])


def test_channel_allows_trace_decreasing():
    ch = Channel([0.5 * np.eye(2)])
    assert not ch.trace_preserving


def test_choi_state_validation():
    with pytest.raises(ValueError):
        ChoiState(np.eye(3))
    with pytest.raises(ValueError):
        ChoiState(np.diag([1.0, -0.5, 0.25, 0.25]))
    with pytest.raises(ValueError):
        ChoiState(np.eye(4))  # trace 4


def test_family_requires_equal_dims(rng):
    with pytest.raises(ValueError):
        ChannelFamily((identity_channel(2), identity_channel(3)))


def test_unitary_channel_rejects_nonunitary():
    with pytest.raises(ChannelError):
        unitary_channel(np.diag([1, 2]))


def test_compose_order():
    x = unitary_channel(SIGMA_X)
    z = unitary_channel(SIGMA_Z)
    rho = projector(np.array([1, 1j]) / np.sqrt(2))
    assert np.allclose(apply(compose(z, x), rho), SIGMA_Z @ SIGMA_X @ rho @ SIGMA_X @ SIGMA_Z)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_choi_trace_and_marginal(dim, K, seed):
    ch = random_channel(dim, K, np.random.default_rng(seed))
    R = choi_of(ch)
    assert np.isclose(R.trace, 1.0)
    # the input marginal of a trace-preserving channel is maximally mixed
    marginal = np.einsum("bxby->xy", R.matrix.reshape(dim, dim, dim, dim))
    assert np.allclose(marginal, np.eye(dim) / dim)


def test_json_roundtrip(rng):
    u = random_unitary(2, rng)
    data = json.loads(json.dumps(matrix_to_json(u)))
    assert np.allclose(matrix_from_json(data), u)
    assert np.allclose(matrix_from_json([[0, 1], [1, 0]]), SIGMA_X)


def test_channel_from_json_kinds(rng):
    assert same_action(channel_from_json({"kind": "bit_flip", "p": 0.3}), standard_channel("bit_flip", p=0.3))
    u = random_unitary(2, rng)
    assert same_action(channel_from_json({"kind": "unitary", "matrices": [matrix_to_json(u)]}), unitary_channel(u))
    ch = random_channel(2, 2, rng)
    desc = {"kind": "kraus", "matrices": [matrix_to_json(k) for k in ch.kraus]}
    assert same_action(channel_from_json(desc), ch)
    assert len(family_from_json([{"kind": "identity"}, {"kind": "phase_flip", "p": 0.1}])) == 2
    assert describe({"kind": "bit_flip", "p": 0.3}) == "bit_flip(p=0.3)"


@pytest.mark.parametrize(
    "desc",
    [
        {"p": 0.3},
        {"kind": "bit_flip"},
        {"kind": "amplitude_damping", "p": 0.1},
        {"kind": "warp_drive"},
        {"kind": "kraus"},
        {"kind": "bit_flip", "p": 1.5},
    ],
)
def test_channel_from_json_errors(desc):
    with pytest.raises(ChannelError):
        channel_from_json(desc)
