import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanforge.channels import (
    Channel,
    bit_flip,
    choi_of,
    identity_channel,
    phase_flip,
    random_channel,
    same_action,
)
from chanforge.complexity import cj_fidelity, complexity
from chanforge.control import (
    ResourceError,
    check_resource_relations,
    lambda_map,
    modified_channel,
    simulate_modified_channel,
    trace_character,
)
from chanforge.matcore import SIGMA_Z, max_abs_diff, projector, random_density_matrix, random_unitary, tensor
from chanforge.protocols import (
    bitflip_correction,
    bitflip_lambda_closed_form,
    bitflip_resources,
    filter_gamma,
    logical_error_enumerated,
    p_mu,
    phase_code_decoder,
    phase_code_encoder,
    phase_code_logical_channel,
    phase_code_report,
    qecc_phase_flip_demo,
    qt_channel,
    qt_kraus_unreduced,
    qt_resources,
    theorem1_witness,
    unitary_shift_correction,
)


def random_schmidt(n, rng):
    v = np.abs(rng.normal(size=n))
    return v / np.linalg.norm(v)


# teleportation ----------------------------------------------------------------


@pytest.mark.parametrize("N", [2, 3, 4])
def test_uniform_qt_is_identity(N, rng):
    res = qt_resources(N)
    ch = random_channel(N, N * N, rng)
    assert same_action(modified_channel(ch, res), identity_channel(N))
    assert trace_character(lambda_map(res)).kind == "preserving"
    assert res.deterministic


@pytest.mark.parametrize("N", [2, 3])
def test_qt_resources_satisfy_relations(N):
    report = check_resource_relations(qt_resources(N))
    for name in ("projector", "unitarity", "factorization", "complete_measurement"):
        assert report[name].holds, name


@pytest.mark.parametrize("N", [2, 3])
def test_qt_channel_matches_simulation(N, rng):
    for _ in range(5):
        mu = random_schmidt(N, rng)
        ch = random_channel(N, 2, rng)
        res = qt_resources(N, mu)
        rho = random_density_matrix(N, rng)
        assert max_abs_diff(simulate_modified_channel(ch, res, rho), qt_channel(mu)(rho)) < 1e-12
        assert complexity(qt_channel(mu)) <= N


def test_qt_closed_form_diagonal():
    mu = [0.8, 0.6]
    ops = qt_channel(mu).kraus
    assert np.allclose(ops[0], np.diag([0.8, 0.6]))
    assert np.allclose(ops[1], np.diag([0.6, 0.8]))


@pytest.mark.parametrize("N", [2, 3])
def test_unreduced_kraus_periodic(N, rng):
    mu = random_schmidt(N, rng)
    ops = qt_kraus_unreduced(mu)
    assert len(ops) == N * N
    for eta in range(N * N):
        assert np.allclose(ops[eta], ops[eta % N])
    assert same_action(Channel(ops), qt_channel(mu))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0))
def test_qubit_qt_is_phase_flip(mu):
    s = np.sqrt(1 - mu * mu)
    assert same_action(qt_channel([mu, s]), phase_flip(p_mu(mu)))
    # off-diagonal damping 2 μ √(1-μ²) = 1 - 2 p_μ
    plus = projector(np.array([1, 1]) / np.sqrt(2))
    out = qt_channel([mu, s])(plus)
    assert abs(2 * out[0, 1].real - (1 - 2 * p_mu(mu))) < 1e-12


def test_p_mu_values():
    assert p_mu(1 / np.sqrt(2)) == pytest.approx(0.0, abs=1e-15)
    assert p_mu(0.0) == 0.5
    assert p_mu(1.0) == 0.5
    with pytest.raises(ValueError):
        p_mu(1.5)


def test_product_ancilla_qt_gives_dephasing():
    # μ = (1, 0): only the diagonal survives
    ch = qt_channel([1.0, 0.0])
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(ch(rho), np.diag([0.5, 0.5]))


@pytest.mark.parametrize("N", [2, 3])
def test_maximally_mixed_ancilla_gives_depolarized_output(N, rng):
    basis = np.eye(N * N)
    res = qt_resources(N, ancilla_mixture=[(1 / N**2, basis[i]) for i in range(N * N)])
    ch = random_channel(N, 2, rng)
    out = modified_channel(ch, res)(random_density_matrix(N, rng))
    assert np.allclose(out, np.eye(N) / N)


@pytest.mark.parametrize("bad", [[0.5, 0.5], [-0.6, 0.8], [1.0]])
def test_qt_rejects_bad_schmidt(bad):
    with pytest.raises(ResourceError):
        qt_resources(2, bad)


# unitary shift ----------------------------------------------------------------------


@pytest.mark.parametrize("N", [2, 3])
def test_unitary_shift(N, rng):
    out = unitary_shift_correction(random_unitary(N, rng), random_unitary(N, rng))
    assert out.complexity_before == 1
    assert out.complexity_after == 0
    assert out.success_prob == pytest.approx(1.0)
    assert cj_fidelity(out.choi_after) == pytest.approx(1.0)


def test_unitary_shift_rejects_nonunitary():
    with pytest.raises(ValueError):
        unitary_shift_correction(np.diag([1, 2]))


# bit flip ---------------------------------------------------------------------------


MUS = [0.1, 0.3, 0.5, 0.6, 1 / np.sqrt(2)]


@pytest.mark.parametrize("mu", MUS)
@pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 1.0])
def test_bitflip_success_and_fidelity(mu, p):
    out = bitflip_correction(mu, p)
    assert abs(out.success_prob - 2 * mu * mu) < 1e-12
    assert max_abs_diff(out.choi_after.matrix, 2 * mu * mu * choi_of(identity_channel(2)).matrix) < 1e-10


@pytest.mark.parametrize("mu", MUS)
def test_bitflip_simulation_oracle(mu, rng):
    res = bitflip_resources(mu)
    rho = random_density_matrix(2, rng)
    out = simulate_modified_channel(bit_flip(0.3), res, rho)
    assert np.allclose(out, 2 * mu * mu * rho, atol=1e-12)


@pytest.mark.parametrize("mu", MUS)
def test_bitflip_lambda_closed_form(mu):
    lm = lambda_map(bitflip_resources(mu))
    closed = bitflip_lambda_closed_form(mu)
    seen = set()
    for op, (_, idx, k, l) in zip(lm.kraus, lm.labels):
        eta, xi = divmod(idx, 2)
        key = (eta, xi, k, l)
        if key in closed:
            assert max_abs_diff(op, closed[key]) < 1e-12
            seen.add(key)
        else:
            assert np.max(np.abs(op)) < 1e-12
    assert seen == set(closed)


def test_bitflip_filter_gamma():
    assert filter_gamma(1 / np.sqrt(2)) == pytest.approx(1.0)
    assert filter_gamma(0.6) == pytest.approx(0.75)


@pytest.mark.parametrize("mu", [0.2, 0.6])
def test_bitflip_with_failures_is_trace_preserving(mu):
    res = bitflip_resources(mu, include_failure=True)
    assert trace_character(lambda_map(res)).kind == "preserving"
    tc = trace_character(lambda_map(bitflip_resources(mu)))
    assert tc.kind == "decreasing"


def test_bitflip_rejects_large_mu():
    with pytest.raises(ValueError):
        bitflip_resources(0.9)


# phase-flip code --------------------------------------------------------------------


def test_encoder_is_isometry():
    enc = phase_code_encoder()
    assert np.allclose(enc.conj().T @ enc, np.eye(2))


def test_decoder_is_complete():
    dec = phase_code_decoder()
    assert np.allclose(np.einsum("kij,kil->jl", dec.conj(), dec), np.eye(8))


@pytest.mark.parametrize("pattern", list(itertools.product((0, 1), repeat=3)))
def test_decoder_corrects_single_flips(pattern):
    enc, dec = phase_code_encoder(), phase_code_decoder()
    err = tensor(*[SIGMA_Z if b else np.eye(2) for b in pattern])
    logical = sum(np.kron(d @ err @ enc, np.conj(d @ err @ enc)) for d in dec)
    ident = np.kron(np.eye(2), np.eye(2))
    if sum(pattern) <= 1:
        assert np.allclose(logical, ident)
    else:
        assert not np.allclose(logical, ident)


@pytest.mark.parametrize("p", [0.0, 0.01, 0.1, 0.3, 0.5, 0.8, 1.0])
def test_logical_error(p):
    formula = 3 * p**2 - 2 * p**3
    assert abs(logical_error_enumerated(p) - formula) < 1e-12
    sim = 1 - cj_fidelity(choi_of(phase_code_logical_channel(phase_flip(p))))
    assert abs(sim - formula) < 1e-12


def test_qecc_demo_report():
    r = qecc_phase_flip_demo(0.6)
    assert r.p == pytest.approx(0.02)
    assert r.logical_error_simulated == pytest.approx(3 * 0.02**2 - 2 * 0.02**3, abs=1e-12)
    assert r.coding_helps
    assert r.state_fidelity_coded >= r.state_fidelity_uncoded


@pytest.mark.parametrize("p", [0.05, 0.2, 0.45, 0.55, 0.8, 1.0])
def test_coding_helps_iff_below_half(p):
    assert phase_code_report(phase_flip(p), p).coding_helps == (p < 0.5)


def test_qecc_demo_rejects_bad_mu():
    with pytest.raises(ValueError):
        qecc_phase_flip_demo(0.0)


# sufficiency witness --------------------------------------------------------------------


@pytest.mark.parametrize("N", [2, 3])
def test_theorem1_witness(N):
    w = theorem1_witness(N, 5, seed=3)
    assert all(c == N * N for c in w.complexities_before)
    assert w.all_corrected
    assert w.max_choi_deviation < 1e-10


def test_theorem1_witness_seeded():
    a = theorem1_witness(2, 3, seed=7)
    b = theorem1_witness(2, 3, seed=7)
    assert a == b
