import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasekrylov import krylov as kr
from phasekrylov import quantum as qm
from phasekrylov import wigner as wg
from phasekrylov.gridcore import BoundaryError, GridError, make_grid

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def grid():
    return make_grid(128, 20.0)


@pytest.fixture(scope="module")
def oscillator(grid):
    H = qm.build_hamiltonian(grid, qm.harmonic_potential())
    return H, qm.eigendecompose(H)


def test_coherent_state_matches_closed_form(grid):
    psi = qm.coherent_state(grid, 1.2, -0.7)
    W = wg.wigner_of_state(psi)
    Q, P = W.grid.mesh()
    exact = np.exp(-(Q - 1.2) ** 2 - (P + 0.7) ** 2) / np.pi
    assert np.max(np.abs(W.values - exact)) < 1e-10


def test_first_excited_state_is_negative_at_origin(grid, oscillator):
    _, spec = oscillator
    W = wg.wigner_of_state(spec.state(1))
    assert W.values[64, 64].real == pytest.approx(-1 / np.pi, abs=1e-8)
    assert W.integrate() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_overlap_formula(q1, p1, q2, p2):
    g = make_grid(128, 20.0)
    a, b = qm.coherent_state(g, q1, p1), qm.coherent_state(g, q2, p2)
    lhs = wg.wigner_of_state(a).overlap(wg.wigner_of_state(b))
    assert lhs.real == pytest.approx(abs(a.inner(b)) ** 2 / TWO_PI, abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(-1.5, 1.5), st.floats(0.7, 1.4))
def test_marginals_are_densities(q0, p0, width):
    g = make_grid(128, 20.0)
    psi = qm.gaussian_state(g, q0, p0, width)
    W = wg.wigner_of_state(psi)
    mq, mp = wg.marginals(W)
    assert np.max(np.abs(mq - np.abs(psi.amplitudes) ** 2)) < 1e-8
    assert np.max(np.abs(mp - wg.momentum_density(psi, W.grid.p_points))) < 1e-8


def test_wigner_is_real(grid):
    W = wg.wigner_of_state(qm.gaussian_state(grid, 0.5, 1.0, 0.9))
    assert W.is_real(1e-14)


def test_transform_quantize_round_trip(grid, oscillator):
    _, spec = oscillator
    a, b = spec.state(2), qm.coherent_state(grid, 0.5, 0.3)
    O = a.projector(b)
    back = wg.weyl_quantize(wg.weyl_transform(O))
    assert np.max(np.abs(back.entries - O.entries)) < 1e-12


def test_trace_of_product_from_symbols(grid, oscillator):
    _, spec = oscillator
    A = qm.low_energy_projection(spec, qm.position_operator(grid), 6)
    B = qm.low_energy_projection(spec, qm.momentum_operator(grid), 6)
    sA, sB = wg.weyl_transform(A), wg.weyl_transform(B @ B)
    lhs = sA.overlap(sB) / TWO_PI
    assert lhs == pytest.approx(np.trace(A.entries @ B.entries @ B.entries), abs=1e-10)


def test_diagonal_operator_maps_to_sampled_function(grid):
    f = lambda q: np.cos(q) + q ** 2
    S = wg.weyl_transform(qm.function_of_position(grid, f))
    assert np.allclose(S.values, f(grid.q_points)[:, None])


def test_half_band_projector_is_the_quantized_one(grid):
    one = wg.symbol_field(grid, lambda q, p: np.ones_like(q))
    B = wg.weyl_quantize(one)
    assert np.allclose(B.entries, wg.half_band_projector(grid).entries, atol=1e-12)
    assert np.allclose(B.entries @ B.entries, B.entries, atol=1e-12)


def test_hamiltonian_field_carries_grid_operator(grid, oscillator):
    H, _ = oscillator
    Hf = wg.hamiltonian_field(grid, qm.harmonic_potential())
    assert wg.value_operator(Hf) is Hf.source
    assert np.array_equal(Hf.source.entries, H.entries)
    Q, P = Hf.grid.mesh()
    assert np.allclose(Hf.values, 0.5 * (Q ** 2 + P ** 2))


def test_boundary_guard_on_transform(grid):
    psi = qm.gaussian_state(grid, 8.5, 0.0, 1.0)
    with pytest.raises(BoundaryError):
        wg.weyl_transform(psi.projector())
    with pytest.raises(BoundaryError):
        wg.wigner_of_state(psi)


def test_rejects_unnormalized_state(grid):
    psi = qm.StateVector(grid, 2 * qm.coherent_state(grid).amplitudes)
    with pytest.raises(ValueError):
        wg.wigner_of_state(psi)


def test_normalization_tags(grid):
    W = wg.wigner_of_state(qm.coherent_state(grid))
    assert np.allclose(W.as_symbol().values, TWO_PI * W.values)
    assert W.as_symbol().as_wigner().normalization == "wigner"
    with pytest.raises(wg.NormalizationError):
        wg.PhaseField(W.grid, W.values, "density")
    other = wg.wigner_of_state(qm.coherent_state(make_grid(128, 21.0)))
    with pytest.raises(GridError):
        W.overlap(other)


def test_parity_expectation_gives_wigner(grid):
    psi = qm.coherent_state(grid, 1.0, 0.5)
    W = wg.wigner_of_state(psi)
    pg = W.grid
    for i, k in [(64, 64), (70, 60), (58, 75)]:
        x = (pg.q_points[i], pg.p_points[k])
        Pi = wg.parity_operator(grid, x, periodic=False)
        val = np.real(psi.inner(Pi @ psi)) / np.pi
        assert val == pytest.approx(W.values[i, k].real, abs=1e-10)


def test_parity_is_involution(grid):
    Pi = wg.parity_operator(grid, (grid.q_points[70], np.pi * 3 / grid.L)).entries
    assert np.allclose(Pi @ Pi, np.eye(grid.N))
    assert np.allclose(Pi, Pi.conj().T)
    with pytest.raises(GridError):
        wg.parity_operator(grid, (0.01, 0.0))


def test_displacement_is_unitary_and_translates(grid):
    psi = qm.coherent_state(grid, 0.0, 0.0)
    T = wg.displacement_operator(grid, (10 * grid.dx, 0.4))
    assert np.allclose(T.entries @ T.entries.conj().T, np.eye(grid.N))
    moved = T @ psi
    ref = qm.coherent_state(grid, 10 * grid.dx, 0.4)
    assert abs(abs(moved.inner(ref)) - 1) < 1e-10
    with pytest.raises(GridError):
        wg.displacement_operator(grid, (0.3 * grid.dx, 0.0))


def test_characteristic_function_two_routes():
    g = make_grid(32, float(np.sqrt(32 * np.pi)))
    psi = qm.coherent_state(g, 0.6, -0.3)
    rho = psi.projector()
    a = wg.characteristic_function(wg.wigner_of_state(psi)).values
    b = wg.characteristic_from_density(rho).values
    assert a[16, 16] == pytest.approx(1.0, abs=1e-10)
    # compare where the displaced state stays inside the box
    assert np.max(np.abs(a[10:23, 10:23] - b[10:23, 10:23])) < 1e-6


@pytest.fixture(scope="module")
def pset(grid, oscillator):
    H, spec = oscillator
    basis = kr.lanczos_state(H, qm.coherent_state(grid, 1.5), k_max=6, spectrum=spec)
    return wg.krylov_phase_set(basis), H


def test_phase_set_hermitian_structure(pset):
    ps, _ = pset
    assert ps.hermitian_error() < 1e-14
    for n in range(ps.dim):
        assert ps.field(n, n).integrate() == pytest.approx(1.0, abs=1e-10)
        assert abs(ps.field(n, (n + 1) % ps.dim).integrate()) < 1e-10


def test_spreading_kernel_trace(pset):
    ps, _ = pset
    K = wg.spreading_kernel(ps)
    D = ps.dim
    assert K.integrate().real / TWO_PI == pytest.approx(D * (D - 1) / 2, abs=1e-9)
    assert np.allclose(wg.weyl_transform(K.source).values, K.values, atol=1e-12)


def test_antisymmetric_neighbor(pset):
    ps, H = pset
    for n in range(ps.dim - 1):
        ref = 0.5 * (ps.fields[n, n + 1] - ps.fields[n + 1, n])
        got = wg.antisymmetric_neighbor(ps, H, n).values
        assert np.max(np.abs(got - ref)) < 1e-10
    with pytest.raises(IndexError):
        wg.antisymmetric_neighbor(ps, H, ps.dim - 1)


def test_generating_function_integral(pset):
    ps, _ = pset
    mu1, mu2 = 0.05 + 0.02j, -0.04
    G = wg.generating_function(ps, mu1, mu2)
    assert G.integrate() == pytest.approx(wg.truncated_exp(mu1 * mu2, ps.dim), abs=1e-12)
    with pytest.raises(wg.TruncationError):
        wg.generating_function(ps, 2.0, 2.0)


def test_save_load_round_trip(tmp_path, grid):
    W = wg.wigner_of_state(qm.gaussian_state(grid, 0.3, 0.8, 1.1))
    binp, meta = wg.save_field(W, tmp_path / "w")
    assert binp.stat().st_size == 2 * 8 * grid.N ** 2
    back = wg.load_field(tmp_path / "w")
    assert np.array_equal(back.values, W.values)
    assert back.normalization == "wigner"


def test_slice_rows(grid):
    W = wg.wigner_of_state(qm.coherent_state(grid))
    q, v = wg.slice_rows(W, "q")
    assert np.allclose(v.real, np.exp(-q ** 2) / np.pi)
    with pytest.raises(ValueError):
        wg.slice_rows(W, "z")
