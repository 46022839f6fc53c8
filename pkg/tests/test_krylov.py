import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from phasekrylov import krylov as kr
from phasekrylov import quantum as qm
from phasekrylov.gridcore import make_grid


@pytest.fixture(scope="module")
def oscillator():
    g = make_grid(256, 24.0)
    H = qm.build_hamiltonian(g, qm.harmonic_potential())
    spec = qm.eigendecompose(H)
    psi0 = qm.coherent_state(g, 1.5, 0.0)
    return g, H, spec, psi0, kr.lanczos_state(H, psi0, spectrum=spec)


def test_coherent_state_chain_is_analytic(oscillator):
    *_, basis = oscillator
    # the seed cutoff leaves a finite spectral measure, so only the low end
    # of the chain matches the infinite-dimensional values
    alpha2 = 1.5 ** 2 / 2
    n = np.arange(11)
    np.testing.assert_allclose(basis.a[:11], alpha2 + n + 0.5, atol=1e-8)
    np.testing.assert_allclose(basis.b[1:11], np.sqrt(alpha2 * n[1:]), atol=1e-8)
    assert basis.b[0] == 0.0


def test_basis_is_orthonormal_and_tridiagonalizes(oscillator):
    _, H, _, _, basis = oscillator
    X = basis.onb()
    assert np.max(np.abs(X.conj() @ X.T - np.eye(basis.dim))) < 1e-8
    T = X.conj() @ H.entries @ X.T
    # the last vector couples out of the chain only by roundoff-scale b
    assert np.max(np.abs(T - basis.tridiagonal())) < 1e-8


def test_chain_evolution_matches_projection(oscillator):
    g, H, spec, psi0, basis = oscillator
    for t in (0.0, 0.7, 3.1, 9.0):
        direct = kr.amplitudes(basis, qm.evolve_state(spec, psi0, t), t)
        chain = kr.chain_evolve(basis.a, basis.b, t)
        assert np.max(np.abs(direct.phi - chain.phi)) < 1e-8
        assert direct.total == pytest.approx(1.0, abs=1e-10)


def test_moments_match_poisson_weights(oscillator):
    # <H^k> over a coherent state: Poisson(|alpha|^2) weights on levels n + 1/2.
    # Powers of the grid matrix are not a usable oracle: roundoff in modes
    # near the top of the grid spectrum gets amplified by E^k.
    *_, basis = oscillator
    mom = kr.tridiagonal_moments(basis.a, basis.b, 12)
    n = np.arange(120)
    w = poisson.pmf(n, 1.5 ** 2 / 2)
    ref = [np.sum(w * (n + 0.5) ** k) for k in range(13)]
    np.testing.assert_allclose(mom, ref, rtol=1e-9)


def test_orthogonal_polynomials_generate_basis(oscillator):
    g, H, spec, psi0, basis = oscillator
    c0 = spec.overlaps(psi0)
    keep = np.abs(c0) > 1e-6
    P = basis.polynomials(spec.eigenvalues[keep])
    for n in range(6):
        cn = spec.overlaps(basis.vectors[n])[keep]
        np.testing.assert_allclose(cn, P[n] * c0[keep], atol=1e-8)


def test_eigenstate_seed_closes_immediately(oscillator):
    g, H, spec, *_ = oscillator
    basis = kr.lanczos_state(H, spec.state(3), spectrum=spec)
    assert basis.dim == 1
    assert basis.a[0] == pytest.approx(3.5, abs=1e-9)


def test_k_max_truncates(oscillator):
    g, H, spec, psi0, _ = oscillator
    assert kr.lanczos_state(H, psi0, k_max=5, spectrum=spec).dim == 5


def test_state_lanczos_errors(oscillator):
    g, H, spec, psi0, _ = oscillator
    with pytest.raises(kr.KrylovError):
        kr.lanczos_state(H, psi0, k_max=0)
    with pytest.raises(kr.KrylovError):
        kr.lanczos_state(H, psi0, tol=0.0)
    with pytest.raises(qm.QuantumError):
        kr.lanczos_state(H, qm.StateVector(g, 2 * psi0.amplitudes))


@pytest.fixture(scope="module")
def small():
    g = make_grid(32, float(np.sqrt(32 * np.pi)))
    H = qm.build_hamiltonian(g, qm.harmonic_potential())
    return g, H, qm.eigendecompose(H)


def test_projected_position_closes_at_two():
    # [H, [H, X]] = X for the oscillator; N = 64 resolves the low levels to
    # 1e-13, while at N = 32 level 4 is off by 1e-5 and the chain keeps going
    g = make_grid(64, float(np.sqrt(64 * np.pi)))
    H = qm.build_hamiltonian(g, qm.harmonic_potential())
    spec = qm.eigendecompose(H)
    O0 = qm.hs_normalize(qm.low_energy_projection(spec, qm.position_operator(g), 5))
    basis = kr.lanczos_operator(H, O0, spectrum=spec)
    assert basis.dim == 2
    assert basis.b[1] == pytest.approx(1.0, abs=1e-8)


def test_operator_basis_structure(small):
    g, _, _ = small
    H = qm.build_hamiltonian(g, qm.quartic_potential(g=0.05))
    spec = qm.eigendecompose(H)
    O0 = qm.hs_normalize(qm.low_energy_projection(spec, qm.position_operator(g), 4))
    basis = kr.lanczos_operator(H, O0, spectrum=spec)
    G = np.array([[qm.hs_inner(A, B) for B in basis.operators] for A in basis.operators])
    assert np.max(np.abs(G - np.eye(basis.dim))) < 1e-8
    for k, O in enumerate(basis.operators):
        M = O.entries
        sign = 1 if k % 2 == 0 else -1
        assert np.max(np.abs(M - sign * M.conj().T)) < 1e-10
    for t in (0.5, 2.0):
        Ot = qm.evolve_operator(spec, O0, t)
        direct = kr.operator_amplitudes(basis, Ot, t).phi
        chain = kr.operator_chain_evolve(basis.b, t).phi
        assert np.max(np.abs(direct - chain)) < 1e-8


def test_operator_lanczos_rejects_non_hermitian(small):
    g, H, spec = small
    with pytest.raises(kr.KrylovError):
        kr.lanczos_operator(H, qm.OperatorMatrix(g, np.triu(np.ones((32, 32)))))
    with pytest.raises(kr.KrylovError):
        kr.lanczos_operator(H, qm.OperatorMatrix(g, np.zeros((32, 32)), True))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 32 - 1), st.floats(-20, 20))
def test_chain_evolution_is_unitary(D, seed, t):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=D)
    b = np.concatenate([[0.0], rng.uniform(0.1, 2.0, size=D - 1)])
    phi = kr.chain_evolve(a, b, t)
    assert phi.total == pytest.approx(1.0, abs=1e-10)


def test_chain_evolve_validates():
    with pytest.raises(kr.KrylovError):
        kr.chain_evolve([0.0, 1.0], [0.0], 1.0)
    with pytest.raises(kr.KrylovError):
        kr.chain_evolve([0.0, 1.0], [1.0, 1.0], 1.0)
