"""Discretization conventions shared by every other module.

Position grid: q_i = -L/2 + i*dx, dx = L/N, N a power of two.
Phase grid:    same q points, p_k = pi*k/L for k = -N/2 .. N/2-1.
Chord grid:    xi_q = j*dx, xi_p = pi*l/L for j, l = -N/2 .. N/2-1.

The p spacing is pi/L rather than 2*pi/L because the Weyl kernel exp(2ipy)
samples y in steps of dx, which halves the resolved momentum range. States
must therefore be band limited to |p| < pi*N/(2L). hbar = 1 throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# relative |psi|^2 weight allowed in the outer sixteenth of the box
BOUNDARY_TOL = 1e-8


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids."""


class BoundaryError(ValueError):
    """Input carries too much weight near the edge of the box."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    N: int
    L: float
    mass: float = 1.0
    q_points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or not _is_pow2(int(self.N)) or self.N < 8:
            raise GridError(f"N must be a power of two >= 8, got {self.N}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise GridError(f"L must be positive, got {self.L}")
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise GridError(f"mass must be positive, got {self.mass}")
        q = -self.L / 2 + self.dx * np.arange(self.N)
        q.setflags(write=False)
        object.__setattr__(self, "q_points", q)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def q(self) -> np.ndarray:
        return self.q_points

    @property
    def momenta(self) -> np.ndarray:
        """Full-resolution momentum set 2*pi*kappa/L in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=1.0 / self.N) / self.L

    @property
    def band_limit(self) -> float:
        """Largest |p| representable on the phase grid."""
        return np.pi * self.N / (2 * self.L)

    def same_as(self, other: "Grid1D") -> bool:
        return self.N == other.N and self.L == other.L and self.mass == other.mass


@dataclass(frozen=True)
class PhaseGrid:
    base: Grid1D

    @property
    def N(self) -> int:
        return self.base.N

    @property
    def q_points(self) -> np.ndarray:
        return self.base.q_points

    @property
    def p_points(self) -> np.ndarray:
        N = self.base.N
        return np.pi * np.arange(-N // 2, N // 2) / self.base.L

    @property
    def dp(self) -> float:
        return np.pi / self.base.L

    @property
    def cell_area(self) -> float:
        return self.base.dx * self.dp

    def mesh(self):
        """(Q, P) arrays of shape (N, N), q-major."""
        return np.meshgrid(self.q_points, self.p_points, indexing="ij")

    def integrate(self, values) -> complex:
        """Riemann sum over the phase grid."""
        return self.cell_area * np.sum(values)

    def same_as(self, other: "PhaseGrid") -> bool:
        return self.base.same_as(other.base)


@dataclass(frozen=True)
class ChordGrid:
    base: Grid1D

    @property
    def N(self) -> int:
        return self.base.N

    @property
    def xi_q_points(self) -> np.ndarray:
        N = self.base.N
        return self.base.dx * np.arange(-N // 2, N // 2)

    @property
    def xi_p_points(self) -> np.ndarray:
        N = self.base.N
        return np.pi * np.arange(-N // 2, N // 2) / self.base.L

    @property
    def cell_area(self) -> float:
        return self.base.dx * np.pi / self.base.L


def make_grid(N: int, L: float, mass: float = 1.0) -> Grid1D:
    return Grid1D(N, float(L), float(mass))


def phase_grid(grid: Grid1D) -> PhaseGrid:
    return PhaseGrid(grid)


def chord_grid(grid: Grid1D) -> ChordGrid:
    return ChordGrid(grid)


def symplectic_product(x, xi) -> float:
    """<x, xi>_s = q*xi_p - xi_q*p."""
    q, p = x
    xq, xp = xi
    return q * xp - xq * p


def edge_slices(N: int):
    """Index ranges that make up the outer sixteenth of the box (both ends)."""
    w = max(1, N // 32)
    return slice(0, w), slice(N - w, N)


def boundary_mass(grid: Grid1D, amplitudes) -> float:
    """Sum of |psi|^2 dx over the outer sixteenth of the box."""
    a = np.asarray(amplitudes)
    lo, hi = edge_slices(grid.N)
    return float(grid.dx * (np.sum(np.abs(a[lo]) ** 2) + np.sum(np.abs(a[hi]) ** 2)))


def operator_boundary_mass(matrix) -> float:
    """Fraction of Frobenius weight in edge rows and columns (averaged).

    For a projector |psi><psi| this reduces to the state's boundary mass.
    """
    M = np.asarray(matrix)
    tot = np.sum(np.abs(M) ** 2)
    if tot == 0:
        return 0.0
    lo, hi = edge_slices(M.shape[0])
    rows = np.sum(np.abs(M[lo]) ** 2) + np.sum(np.abs(M[hi]) ** 2)
    cols = np.sum(np.abs(M[:, lo]) ** 2) + np.sum(np.abs(M[:, hi]) ** 2)
    return float((rows + cols) / (2 * tot))


def fft_roundtrip_error(x, axis=-1) -> float:
    x = np.asarray(x)
    y = np.fft.ifft(np.fft.fft(x, axis=axis), axis=axis)
    return float(np.max(np.abs(y - x)) / max(np.max(np.abs(x)), 1e-300))


def band_mass(grid: Grid1D, amplitudes) -> float:
    """Weight of plane waves at or beyond the phase-grid band limit.

    The grid Weyl map reads only position pairs (a, b) with a + b even, which
    is faithful for states confined to |p| < pi N / (2L). Weight outside that
    half band shows up as errors in phase-space overlap identities.
    """
    a = np.asarray(amplitudes)
    c = np.fft.fft(a, norm="ortho")
    kappa = np.fft.fftfreq(grid.N, d=1.0 / grid.N)
    out = (kappa >= grid.N // 4) | (kappa < -grid.N // 4)
    tot = np.sum(np.abs(c) ** 2)
    return float(np.sum(np.abs(c[out]) ** 2) / tot) if tot else 0.0
