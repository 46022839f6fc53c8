import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasekrylov import quantum as qm
from phasekrylov.gridcore import BoundaryError, GridError, make_grid


@pytest.fixture(scope="module")
def oscillator():
    g = make_grid(256, 20.0)
    H = qm.build_hamiltonian(g, qm.harmonic_potential())
    return g, H, qm.eigendecompose(H)


def test_oscillator_levels(oscillator):
    _, _, spec = oscillator
    np.testing.assert_allclose(spec.eigenvalues[:20], np.arange(20) + 0.5, atol=1e-10)


def test_spectral_reconstruction(oscillator):
    _, H, spec = oscillator
    V, E = spec.eigenvectors, spec.eigenvalues
    rel = np.linalg.norm(H.entries - (V * E) @ V.conj().T) / np.linalg.norm(H.entries)
    assert rel < 1e-10


def test_kinetic_matrix_on_plane_wave():
    g = make_grid(64, 10.0)
    k = 2 * np.pi * 5 / g.L
    psi = np.exp(1j * k * g.q_points)
    np.testing.assert_allclose(qm.kinetic_matrix(g) @ psi, 0.5 * k ** 2 * psi, atol=1e-10)


def test_ground_state_is_gaussian(oscillator):
    g, _, spec = oscillator
    psi = spec.state(0)
    ref = qm.coherent_state(g)
    assert abs(abs(psi.inner(ref)) - 1) < 1e-10


def test_coherent_state_follows_classical_orbit(oscillator):
    g, _, spec = oscillator
    psi0 = qm.coherent_state(g, 1.5, 0.5)
    X = qm.position_operator(g)
    for t in (0.3, 1.7, 4.0):
        psi = qm.evolve_state(spec, psi0, t)
        q_mean = np.real(psi.inner(X @ psi))
        assert q_mean == pytest.approx(1.5 * np.cos(t) + 0.5 * np.sin(t), abs=1e-9)


def test_evolution_is_unitary_and_reversible(oscillator):
    g, _, spec = oscillator
    psi0 = qm.gaussian_state(g, 1.0, -0.5, 0.8)
    psi = qm.evolve_state(spec, psi0, 2.3)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)
    back = qm.evolve_state(spec, psi, -2.3)
    np.testing.assert_allclose(back.amplitudes, psi0.amplitudes, atol=1e-10)


def test_heisenberg_expectation_matches_schrodinger(oscillator):
    g, _, spec = oscillator
    psi0 = qm.coherent_state(g, 1.0)
    X = qm.position_operator(g)
    t = 0.9
    psi = qm.evolve_state(spec, psi0, t)
    Xt = qm.evolve_operator(spec, X, t)
    assert np.real(psi0.inner(Xt @ psi0)) == pytest.approx(np.real(psi.inner(X @ psi)), abs=1e-10)


def test_momentum_operator_hermitian_and_canonical(oscillator):
    g, _, spec = oscillator
    P, X = qm.momentum_operator(g), qm.position_operator(g)
    assert P.is_hermitian()
    psi = spec.state(0)
    comm = (X @ P - P @ X) @ psi
    # [X, P] = i on band-limited, confined states
    np.testing.assert_allclose(comm.amplitudes, 1j * psi.amplitudes, atol=1e-8)


def test_hs_inner_of_identity_is_one():
    g = make_grid(32, 8.0)
    Id = qm.identity_operator(g)
    assert qm.hs_inner(Id, Id) == pytest.approx(1.0)
    assert qm.hs_normalize(qm.position_operator(g)).hs_norm() == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_hs_inner_is_sesquilinear(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(16, 5.0)
    A, B = (qm.OperatorMatrix(g, rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
            for _ in range(2))
    c = complex(rng.normal(), rng.normal())
    assert qm.hs_inner(A, B.scale(c)) == pytest.approx(c * qm.hs_inner(A, B))
    assert qm.hs_inner(A.scale(c), B) == pytest.approx(np.conj(c) * qm.hs_inner(A, B))
    assert qm.hs_inner(B, A) == pytest.approx(np.conj(qm.hs_inner(A, B)))


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-2, 2), st.floats(0.5, 2.0))
def test_gaussian_state_normalized(q0, p0, width):
    g = make_grid(128, 24.0)
    psi = qm.gaussian_state(g, q0, p0, width)
    assert psi.is_normalized()


def test_boundary_check_raises_for_wide_state():
    g = make_grid(64, 10.0)
    with pytest.raises(BoundaryError, match="boundary-mass"):
        qm.gaussian_state(g, 3.0, 0.0, 3.0).check_boundary()


def test_low_energy_projection_commutes_with_h(oscillator):
    g, H, spec = oscillator
    P4 = qm.low_energy_projection(spec, qm.identity_operator(g), 4)
    assert np.trace(P4.entries).real == pytest.approx(4.0)
    comm = H.entries @ P4.entries - P4.entries @ H.entries
    assert np.max(np.abs(comm)) < 1e-10


def test_polynomial_potential_derivatives():
    V = qm.quartic_potential(omega=2.0, g=0.3)
    q = np.linspace(-2, 2, 7)
    np.testing.assert_allclose(V(q), 2.0 * q ** 2 + 0.3 * q ** 4)
    np.testing.assert_allclose(V.derivative(3)(q), 7.2 * q)
    np.testing.assert_allclose(V.derivative(5)(q), 0.0)
    assert V.degree == 4
    assert qm.harmonic_potential().degree == 2


def test_shape_and_hermiticity_errors():
    g = make_grid(16, 4.0)
    with pytest.raises(GridError):
        qm.StateVector(g, np.ones(8))
    with pytest.raises(GridError):
        qm.OperatorMatrix(g, np.eye(8))
    with pytest.raises(qm.QuantumError):
        qm.eigendecompose(qm.OperatorMatrix(g, np.triu(np.ones((16, 16)))))
    with pytest.raises(qm.QuantumError):
        qm.hs_normalize(qm.OperatorMatrix(g, np.zeros((16, 16))))
    with pytest.raises(qm.QuantumError):
        qm.build_hamiltonian(g, lambda q: np.full_like(q, np.nan))


def test_mismatched_grids():
    a = qm.identity_operator(make_grid(16, 4.0))
    b = qm.identity_operator(make_grid(16, 5.0))
    with pytest.raises(GridError):
        a @ b
