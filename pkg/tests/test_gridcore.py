import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasekrylov.gridcore import (BoundaryError, GridError, band_mass, boundary_mass, chord_grid,
                                  edge_slices, fft_roundtrip_error, make_grid,
                                  operator_boundary_mass, phase_grid, symplectic_product)

pow2 = st.sampled_from([8, 16, 32, 64, 128, 256])
lengths = st.floats(0.5, 100.0)


def test_position_grid_layout():
    g = make_grid(16, 8.0)
    assert g.q_points[0] == -4.0
    assert g.dx == 0.5
    np.testing.assert_allclose(np.diff(g.q_points), 0.5)
    assert g.q_points[8] == 0.0


def test_momentum_grid_has_half_spacing():
    g = make_grid(16, 8.0)
    pg = phase_grid(g)
    np.testing.assert_allclose(pg.p_points, np.pi * np.arange(-8, 8) / 8.0)
    assert pg.cell_area == pytest.approx(g.dx * np.pi / g.L)
    # band limit sits one half-step above the last momentum sample
    assert g.band_limit == pytest.approx(np.pi * 16 / 16.0)


@pytest.mark.parametrize("N", [0, 7, 12, 4, 100])
def test_rejects_non_power_of_two(N):
    with pytest.raises(GridError):
        make_grid(N, 10.0)


@pytest.mark.parametrize("L", [0.0, -1.0, np.inf, np.nan])
def test_rejects_bad_length(L):
    with pytest.raises(GridError):
        make_grid(32, L)


def test_rejects_bad_mass():
    with pytest.raises(GridError):
        make_grid(32, 10.0, mass=0.0)


def test_grid_is_frozen():
    g = make_grid(32, 10.0)
    with pytest.raises(ValueError):
        g.q_points[0] = 1.0


@given(pow2, lengths)
def test_phase_cell_area_times_points_is_pi_n(N, L):
    # N^2 cells of area dx * pi / L cover pi * N
    pg = phase_grid(make_grid(N, L))
    assert pg.cell_area * N ** 2 == pytest.approx(np.pi * N)


@given(pow2, lengths)
def test_chord_grid_contains_zero(N, L):
    cg = chord_grid(make_grid(N, L))
    assert cg.xi_q_points[N // 2] == 0.0
    assert cg.xi_p_points[N // 2] == 0.0


@given(st.tuples(*[st.floats(-10, 10)] * 4))
def test_symplectic_product_antisymmetric(v):
    x, y = v[:2], v[2:]
    assert symplectic_product(x, y) == pytest.approx(-symplectic_product(y, x), abs=1e-12)
    assert symplectic_product(x, x) == 0.0


def test_boundary_mass_of_centred_gaussian_is_tiny():
    g = make_grid(128, 20.0)
    psi = np.pi ** -0.25 * np.exp(-g.q_points ** 2 / 2)
    assert boundary_mass(g, psi) < 1e-20


def test_boundary_mass_of_edge_spike():
    g = make_grid(64, 10.0)
    a = np.zeros(64)
    a[0] = 1 / np.sqrt(g.dx)
    assert boundary_mass(g, a) == pytest.approx(1.0)


def test_edge_slices_cover_a_sixteenth():
    lo, hi = edge_slices(256)
    assert (lo.stop - lo.start) + (hi.stop - hi.start) == 16


def test_operator_boundary_mass_matches_state_for_projector():
    g = make_grid(64, 10.0)
    psi = np.exp(-(g.q_points - 3.5) ** 2)
    psi /= np.sqrt(g.dx * np.sum(psi ** 2))
    v = np.sqrt(g.dx) * psi
    assert operator_boundary_mass(np.outer(v, v)) == pytest.approx(boundary_mass(g, psi))
    assert operator_boundary_mass(np.zeros((8, 8))) == 0.0


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1), pow2)
def test_fft_roundtrip(seed, N):
    x = np.random.default_rng(seed).normal(size=(4, N))
    assert fft_roundtrip_error(x) < 1e-13


def test_band_mass_separates_slow_and_fast_waves():
    g = make_grid(64, 10.0)
    slow = np.exp(2j * np.pi * 3 * np.arange(64) / 64)
    fast = np.exp(2j * np.pi * 20 * np.arange(64) / 64)
    assert band_mass(g, slow) < 1e-28
    assert band_mass(g, fast) == pytest.approx(1.0)
    assert band_mass(g, np.zeros(64)) == 0.0


def test_boundary_error_is_value_error():
    assert issubclass(BoundaryError, ValueError)
