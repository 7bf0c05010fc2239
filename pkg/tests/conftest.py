import numpy as np
import pytest

from chanforge.control import ControlResources, outcome
from chanforge.matcore import ket, projector, random_state, random_unitary

# filled by the acceptance suite, printed once at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_measurement(dim, n_outcomes, rng):
    """Complete orthogonal projective measurement split into ``n_outcomes`` groups."""
    basis = random_unitary(dim, rng)
    cuts = np.array_split(np.arange(dim), n_outcomes)
    return [basis[:, c] @ basis[:, c].conj().T for c in cuts]


def random_resources(N, rng, dim_a=2, dim_b=2, n_outcomes=2, product=False, receiver_projectors=True):
    """Random pure-ancilla resources with a complete sender measurement."""
    if product:
        psi = np.kron(random_state(dim_a, rng), random_state(dim_b, rng))
    else:
        psi = random_state(dim_a * dim_b, rng)
    pis = random_measurement(N * dim_a, n_outcomes, rng)
    # the sender unitary precedes the measurement, so it is shared by all outcomes
    u_a = random_unitary(N * dim_a, rng)
    outs = []
    for pi in pis:
        pib = None
        if receiver_projectors:
            pib = random_measurement(N * dim_b, 2, rng)[0]
        outs.append(
            outcome(
                U_Aa=u_a,
                Pi_Aa=pi,
                U_Bb=random_unitary(N * dim_b, rng),
                Pi_Bb=pib,
                dim_Aa=N * dim_a,
                dim_Bb=N * dim_b,
            )
        )
    return ControlResources.from_state(N, psi, dim_a, dim_b, outs)


def bistochastic_resources(N, d, rng, measure=True):
    """Controlled unitary Σ_x V_x ⊗ |x><x| then I ⊗ W, optional measurement of a."""
    ctrl = sum(np.kron(random_unitary(N, rng), projector(ket(x, d))) for x in range(d))
    u = np.kron(np.eye(N), random_unitary(d, rng)) @ ctrl
    pis = [np.kron(np.eye(N), projector(ket(e, d))) for e in range(d)] if measure else [np.eye(N * d)]
    outs = [outcome(U_Aa=u, Pi_Aa=p, U_Bb=random_unitary(N * d, rng), dim_Aa=N * d, dim_Bb=N * d) for p in pis]
    return ControlResources.from_state(N, random_state(d * d, rng), d, d, outs)
