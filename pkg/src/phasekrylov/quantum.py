"""Hilbert-space layer: Hamiltonians, spectra, evolution, inner products.

Operators are stored as N x N matrices in the orthonormal position basis
u_a = e_a / sqrt(dx). Wavefunction amplitudes psi(q_i) satisfy
sum |psi|^2 dx = 1, so the projector |psi><phi| has matrix dx * psi phi^H.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gridcore import BOUNDARY_TOL, BoundaryError, Grid1D, GridError, boundary_mass


class QuantumError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    grid: Grid1D
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.grid.N,):
            raise GridError(f"state has shape {a.shape}, grid has N={self.grid.N}")
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.amplitudes) ** 2)))

    def normalized(self) -> "StateVector":
        return StateVector(self.grid, self.amplitudes / self.norm)

    def is_normalized(self, tol=1e-10) -> bool:
        return abs(self.norm ** 2 - 1) <= tol

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(self.grid.dx * np.vdot(self.amplitudes, other.amplitudes))

    def boundary_mass(self) -> float:
        return boundary_mass(self.grid, self.amplitudes)

    def check_boundary(self, tol=BOUNDARY_TOL):
        m = self.boundary_mass()
        if m > tol:
            raise BoundaryError(f"boundary-mass diagnostic {m:.3e} exceeds {tol:.0e}")

    def onb(self) -> np.ndarray:
        """Coordinates in the orthonormal position basis."""
        return np.sqrt(self.grid.dx) * self.amplitudes

    @classmethod
    def from_onb(cls, grid: Grid1D, v) -> "StateVector":
        return cls(grid, np.asarray(v) / np.sqrt(grid.dx))

    def projector(self, other: "StateVector" | None = None) -> "OperatorMatrix":
        """|self><other| (other defaults to self)."""
        o = self if other is None else other
        M = np.outer(self.onb(), o.onb().conj())
        return OperatorMatrix(self.grid, M, hermitian=other is None)


@dataclass(frozen=True)
class OperatorMatrix:
    grid: Grid1D
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        M = np.asarray(self.entries, dtype=complex)
        if M.shape != (self.grid.N, self.grid.N):
            raise GridError(f"operator has shape {M.shape}, grid has N={self.grid.N}")
        object.__setattr__(self, "entries", M)

    @property
    def H(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.entries.conj().T, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_same(self, other)
            return OperatorMatrix(self.grid, self.entries @ other.entries)
        if isinstance(other, StateVector):
            return StateVector(self.grid, self.entries @ other.amplitudes)
        return NotImplemented

    def __add__(self, other: "OperatorMatrix"):
        _check_same(self, other)
        return OperatorMatrix(self.grid, self.entries + other.entries,
                              self.hermitian and other.hermitian)

    def __sub__(self, other: "OperatorMatrix"):
        _check_same(self, other)
        return OperatorMatrix(self.grid, self.entries - other.entries,
                              self.hermitian and other.hermitian)

    def scale(self, c) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, c * self.entries, self.hermitian and np.isreal(c))

    def hermiticity_error(self) -> float:
        M = self.entries
        return float(np.max(np.abs(M - M.conj().T)) / max(np.max(np.abs(M)), 1e-300))

    def is_hermitian(self, tol=1e-10) -> bool:
        return self.hermiticity_error() <= tol

    def norm2(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def hs_norm(self) -> float:
        """sqrt(<<O|O>>) with the normalized Hilbert-Schmidt product."""
        return float(np.sqrt(np.real(hs_inner(self, self))))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def _check_same(a, b):
    if not a.grid.same_as(b.grid):
        raise GridError("operands live on different grids")


@dataclass(frozen=True)
class SpectralDecomposition:
    grid: Grid1D
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthonormal basis coordinates

    def state(self, n: int) -> StateVector:
        return StateVector.from_onb(self.grid, self.eigenvectors[:, n])

    def overlaps(self, psi: StateVector) -> np.ndarray:
        """<E_a|psi> for all a."""
        return self.eigenvectors.conj().T @ psi.onb()

    def propagator(self, t: float) -> np.ndarray:
        V = self.eigenvectors
        return (V * np.exp(-1j * self.eigenvalues * t)) @ V.conj().T


# ---------------------------------------------------------------- builders

def kinetic_matrix(grid: Grid1D) -> np.ndarray:
    """P^2/2m applied spectrally on the full-resolution momentum set."""
    N = grid.N
    F = np.fft.fft(np.eye(N), axis=0, norm="ortho")
    T = F.conj().T @ (grid.momenta[:, None] ** 2 / (2 * grid.mass) * F)
    return np.real_if_close(T, tol=1e6).astype(complex)


def build_hamiltonian(grid: Grid1D, potential: Callable) -> OperatorMatrix:
    v = np.asarray(potential(grid.q_points), dtype=float)
    if v.shape == ():
        v = np.full(grid.N, float(v))
    if not np.all(np.isfinite(v)):
        raise QuantumError("potential has non-finite samples")
    H = kinetic_matrix(grid)
    H = 0.5 * (H + H.conj().T)
    H[np.diag_indices(grid.N)] += v
    return OperatorMatrix(grid, H, hermitian=True)


def position_operator(grid: Grid1D) -> OperatorMatrix:
    return OperatorMatrix(grid, np.diag(grid.q_points).astype(complex), hermitian=True)


def momentum_operator(grid: Grid1D) -> OperatorMatrix:
    """Spectral P. The Nyquist mode is dropped so that P is real antisymmetric times -i."""
    N = grid.N
    k = grid.momenta.copy()
    k[N // 2] = 0.0
    F = np.fft.fft(np.eye(N), axis=0, norm="ortho")
    P = F.conj().T @ (k[:, None] * F)
    return OperatorMatrix(grid, 0.5 * (P + P.conj().T), hermitian=True)


def identity_operator(grid: Grid1D) -> OperatorMatrix:
    return OperatorMatrix(grid, np.eye(grid.N, dtype=complex), hermitian=True)


def function_of_position(grid: Grid1D, f: Callable) -> OperatorMatrix:
    return OperatorMatrix(grid, np.diag(np.asarray(f(grid.q_points), dtype=complex)), hermitian=True)


def gaussian_state(grid: Grid1D, q0=0.0, p0=0.0, width=1.0) -> StateVector:
    """Normalized Gaussian packet exp(-(q-q0)^2/(2 width^2) + i p0 q)."""
    q = grid.q_points
    a = (np.pi * width ** 2) ** -0.25 * np.exp(-((q - q0) ** 2) / (2 * width ** 2) + 1j * p0 * q)
    return StateVector(grid, a).normalized()


def coherent_state(grid: Grid1D, q0=0.0, p0=0.0, omega=1.0) -> StateVector:
    """Oscillator coherent state centred at (q0, p0); width 1/sqrt(m*omega)."""
    return gaussian_state(grid, q0, p0, 1.0 / np.sqrt(grid.mass * omega))


# ---------------------------------------------------------------- dynamics

def eigendecompose(H: OperatorMatrix) -> SpectralDecomposition:
    if H.hermiticity_error() > 1e-10:
        raise QuantumError("eigendecompose needs a Hermitian matrix")
    M = 0.5 * (H.entries + H.entries.conj().T)
    E, V = np.linalg.eigh(M)
    return SpectralDecomposition(H.grid, E, V)


def evolve_state(spec: SpectralDecomposition, psi0: StateVector, t: float) -> StateVector:
    if not psi0.is_normalized():
        raise QuantumError("psi0 must be normalized")
    if t == 0:
        return psi0
    c = spec.overlaps(psi0)
    v = spec.eigenvectors @ (np.exp(-1j * spec.eigenvalues * t) * c)
    return StateVector.from_onb(spec.grid, v)


def evolve_operator(spec: SpectralDecomposition, O0: OperatorMatrix, t: float) -> OperatorMatrix:
    """Heisenberg picture O(t) = U^dag O U with U = exp(-iHt)."""
    if not spec.grid.same_as(O0.grid):
        raise GridError("operator and spectrum live on different grids")
    U = spec.propagator(t)
    Ot = U.conj().T @ O0.entries @ U
    if O0.hermitian:
        Ot = 0.5 * (Ot + Ot.conj().T)
    return OperatorMatrix(O0.grid, Ot, O0.hermitian)


def hs_inner(A: OperatorMatrix, B: OperatorMatrix) -> complex:
    """<<A|B>> = Tr[A^dag B] / N."""
    if A.entries.shape != B.entries.shape:
        raise GridError("dimension mismatch")
    return complex(np.vdot(A.entries, B.entries) / A.entries.shape[0])


def hs_normalize(O: OperatorMatrix) -> OperatorMatrix:
    n = O.hs_norm()
    if n == 0:
        raise QuantumError("zero operator")
    return OperatorMatrix(O.grid, O.entries / n, O.hermitian)


def low_energy_projection(spec: SpectralDecomposition, O: OperatorMatrix, n_levels: int) -> OperatorMatrix:
    """P O P with P the projector onto the n_levels lowest eigenstates.

    Keeps an operator confined in the box and band limited, which is what the
    phase-space transforms need.
    """
    V = spec.eigenvectors[:, :n_levels]
    P = V @ V.conj().T
    return OperatorMatrix(O.grid, P @ O.entries @ P, O.hermitian)


# ---------------------------------------------------------------- potentials

@dataclass(frozen=True)
class PolynomialPotential:
    """V(q) = sum_k coeffs[k] q^k, with exact derivatives."""

    coeffs: tuple
    name: str = "polynomial"

    def __call__(self, q):
        return np.polynomial.polynomial.polyval(q, self.coeffs)

    def derivative(self, order: int):
        c = np.polynomial.polynomial.polyder(np.asarray(self.coeffs, float), order) if order else self.coeffs
        return lambda q: np.polynomial.polynomial.polyval(q, c) + 0.0 * np.asarray(q)

    @property
    def degree(self) -> int:
        nz = np.nonzero(np.asarray(self.coeffs))[0]
        return int(nz[-1]) if len(nz) else 0


def harmonic_potential(omega: float = 1.0, mass: float = 1.0) -> PolynomialPotential:
    return PolynomialPotential((0.0, 0.0, 0.5 * mass * omega ** 2), "harmonic")


def quartic_potential(omega: float = 1.0, g: float = 0.1, mass: float = 1.0) -> PolynomialPotential:
    return PolynomialPotential((0.0, 0.0, 0.5 * mass * omega ** 2, 0.0, g), "quartic")
