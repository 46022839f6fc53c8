import numpy as np
import pytest

from phasekrylov import krylov as kr
from phasekrylov import moyal as my
from phasekrylov import quantum as qm
from phasekrylov import wigner as wg
from phasekrylov.gridcore import BoundaryError, GridError, make_grid


@pytest.fixture(scope="module")
def setup():
    g = make_grid(128, 20.0)
    pot = qm.harmonic_potential()
    H = qm.build_hamiltonian(g, pot)
    spec = qm.eigendecompose(H)
    basis = kr.lanczos_state(H, qm.coherent_state(g, 1.5), k_max=8, spectrum=spec)
    return g, pot, spec, wg.krylov_phase_set(basis), wg.hamiltonian_field(g, pot)


def _gauss(q0, p0, s):
    return lambda q, p: np.exp(-((q - q0) ** 2 + (p - p0) ** 2) / s)


def test_star_matches_integral_kernel():
    g = make_grid(64, float(np.sqrt(64 * np.pi)))
    fA, fB = _gauss(0.3, 0.0, 1.5), _gauss(-0.2, 0.4, 2.0)
    S = my.star(wg.symbol_field(g, fA), wg.symbol_field(g, fB))
    pg = S.grid
    idx = [(32, 32), (34, 30), (29, 35)]
    pts = [(pg.q_points[i], pg.p_points[k]) for i, k in idx]
    ref = my.star_integral_oracle(fA, fB, pts, extent=7.0, n=160)
    got = np.array([S.values[i, k] for i, k in idx])
    assert np.max(np.abs(got - ref)) < 1e-6


def test_star_of_gaussian_with_itself_is_closed_form():
    # exp(-x^2) * exp(-x^2) = exp(-x^2) / 2 for the unit-width Gaussian symbol
    g = make_grid(64, float(np.sqrt(64 * np.pi)))
    G = wg.symbol_field(g, lambda q, p: np.exp(-(q ** 2 + p ** 2)))
    S = my.star(G, G)
    assert np.max(np.abs(S.values - G.values / 2)) < 1e-10


def test_bracket_is_antisymmetric(setup):
    g, pot, spec, pset, Hf = setup
    A, B = pset.field(0, 1), pset.field(2, 2)
    ab, ba = my.moyal_bracket(A, B), my.moyal_bracket(B, A)
    assert np.max(np.abs(ab.values + ba.values)) < 1e-14


def test_stationary_states_commute_with_h(setup):
    g, pot, spec, pset, Hf = setup
    for n in range(5):
        W = wg.wigner_of_state(spec.state(n))
        # the bracket is roundoff-sized, so its relative edge weight is meaningless
        assert my.moyal_bracket(Hf, W, check=False).max_abs() < 1e-10


def test_genvalue_residual_of_off_diagonal_pair(setup):
    g, pot, spec, pset, Hf = setup
    a, b = spec.state(1), spec.state(3)
    W = wg.weyl_transform(a.projector(b)).as_wigner()
    assert my.star_genvalue_residual(Hf, W, spec.eigenvalues[1], spec.eigenvalues[3]) < 1e-10


@pytest.mark.parametrize("side", ["left", "right"])
def test_general_star_lanczos(setup, side):
    g, pot, spec, pset, Hf = setup
    worst = max(my.star_lanczos_general(Hf, pset, n, m, side)
                for n in range(pset.dim - 1) for m in range(pset.dim - 1))
    assert worst < 1e-10


def test_star_lanczos_general_bad_side(setup):
    g, pot, spec, pset, Hf = setup
    with pytest.raises(ValueError):
        my.star_lanczos_general(Hf, pset, 0, 0, "middle")
    with pytest.raises(IndexError):
        my.star_lanczos_step(Hf, pset, pset.dim)


def test_coefficients_from_phase_space(setup):
    g, pot, spec, pset, Hf = setup
    a, b = my.lanczos_coeffs_from_phase(Hf, pset)
    np.testing.assert_allclose(a, pset.basis.a, atol=1e-10)
    np.testing.assert_allclose(b, pset.basis.b, atol=1e-10)
    np.testing.assert_allclose(my.split_diagonal_coefficients(pset, pot), pset.basis.a, atol=1e-10)


def test_star_keeps_wigner_tag(setup):
    g, pot, spec, pset, Hf = setup
    assert my.star(Hf, pset.field(0, 0)).normalization == "wigner"
    assert my.star(Hf, Hf, check=False).normalization == "symbol"


def test_star_guards_unconfined_products(setup):
    g, pot, spec, pset, Hf = setup
    with pytest.raises(BoundaryError):
        my.star(Hf, Hf)


def test_star_rejects_mismatched_grids(setup):
    g, pot, spec, pset, Hf = setup
    other = wg.hamiltonian_field(make_grid(128, 21.0), pot)
    with pytest.raises(GridError):
        my.star(Hf, other)
    with pytest.raises(GridError):
        my.moyal_bracket(Hf, other)
