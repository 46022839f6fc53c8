"""Time derivative of Wigner functions in three forms.

* Moyal form: dW/dt = -i [H, W]_*.
* Kinetic/potential split: the classical drift and force terms plus odd-order
  potential-derivative corrections, with spectral p-derivatives.
* Krylov form: dW/dt = i sum_nm W^K_nm (M_nm - conj(M_mn)), with
  M_nm = phi_n conj((T phi)_m) and T the tridiagonal Lanczos matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .gridcore import GridError
from .krylov import ChainAmplitudes, KrylovError
from .moyal import moyal_bracket
from .quantum import PolynomialPotential
from .wigner import KrylovPhaseSet, NormalizationError, PhaseField

LAMBDA_CAP = 9


# ---------------------------------------------------------------- spectral derivatives

def dp_power(W: PhaseField, order: int) -> np.ndarray:
    """d^order W / dp^order.

    Along p, a row is a Fourier series in the half-separation y_j = j dx with
    kernel e^{2ipy}, so differentiation multiplies each term by (2 i y_j)^order.
    """
    if order == 0:
        return W.values.copy()
    N = W.grid.N
    y = W.base.dx * np.fft.fftfreq(N, d=1.0 / N)
    mult = (2j * y) ** order
    if order % 2:
        mult[N // 2] = 0.0
    R = np.fft.fft(np.fft.ifftshift(W.values, axes=1), axis=1) / N
    return N * np.fft.fftshift(np.fft.ifft(R * mult[None, :], axis=1), axes=1)


def dq(W: PhaseField) -> np.ndarray:
    """Spectral d/dq along the position axis (Nyquist mode dropped)."""
    k = 1j * W.base.momenta
    k[W.grid.N // 2] = 0.0
    return np.fft.ifft(k[:, None] * np.fft.fft(W.values, axis=0), axis=0)


def _spectral_derivative(samples: np.ndarray, grid, order: int) -> np.ndarray:
    k = 1j * grid.momenta
    if order % 2:
        k[grid.N // 2] = 0.0
    return np.real(np.fft.ifft(k ** order * np.fft.fft(samples)))


def potential_derivative(potential, grid, order: int) -> np.ndarray:
    """V^(order)(q) on the grid: exact for polynomial potentials, spectral otherwise.

    The spectral route treats V as periodic on the box and is only meaningful
    for potentials that are smooth and periodic there.
    """
    q = grid.q_points
    if isinstance(potential, PolynomialPotential):
        return np.asarray(potential.derivative(order)(q), dtype=float)
    if hasattr(potential, "derivative"):
        return np.asarray(potential.derivative(order)(q), dtype=float)
    return _spectral_derivative(np.asarray(potential(q), dtype=float), grid, order)


def _has_vanishing_derivative(potential, order: int) -> bool:
    return isinstance(potential, PolynomialPotential) and potential.degree < order


# ---------------------------------------------------------------- Moyal form

def _require_wigner(W: PhaseField):
    if W.normalization != "wigner":
        raise NormalizationError("W must be Wigner-normalized")


def moyal_rhs(W: PhaseField, H_field: PhaseField) -> PhaseField:
    """dW/dt = -i [H, W]_*."""
    _require_wigner(W)
    if H_field.normalization != "symbol":
        raise NormalizationError("H_field must be symbol-normalized")
    br = moyal_bracket(H_field, W)
    src = br.source.scale(-1j) if br.source is not None else None
    return PhaseField(W.grid, -1j * br.values, "wigner", src)


def transport_rhs(W: PhaseField, potential, mass: float = 1.0) -> np.ndarray:
    """Classical Liouville flow -(p/m) dW/dq + V'(q) dW/dp."""
    Q, P = W.grid.mesh()
    v1 = potential_derivative(potential, W.base, 1)
    return -(P / mass) * dq(W) + v1[:, None] * dp_power(W, 1)


# ---------------------------------------------------------------- kinetic/potential split

@dataclass(frozen=True)
class LiouvilleSplit:
    classical: PhaseField
    quantum_terms: dict = field(default_factory=dict)  # odd lambda >= 3 -> PhaseField
    lambda_max: int = 3

    def total(self) -> PhaseField:
        out = self.classical.values.copy()
        for f in self.quantum_terms.values():
            out = out + f.values
        return self.classical.with_values(out, source=None)


def quantum_term(W: PhaseField, potential, lam: int) -> PhaseField:
    """(1/lam!) (1/(2i))^(lam-1) V^(lam)(q) d^lam W / dp^lam."""
    if lam < 3 or lam % 2 == 0:
        raise ValueError("quantum terms exist only at odd lambda >= 3")
    vl = potential_derivative(potential, W.base, lam)
    coeff = (1 / (2j)) ** (lam - 1) / factorial(lam)
    return PhaseField(W.grid, coeff * vl[:, None] * dp_power(W, lam), "wigner")


def liouville_split(W: PhaseField, potential, lambda_max: int = 3, mass: float = 1.0,
                    lambda_cap: int = LAMBDA_CAP) -> LiouvilleSplit:
    """Classical transport plus the odd-order corrections up to lambda_max.

    Orders whose potential derivative vanishes identically (polynomials of
    lower degree) are left out of quantum_terms. For non-polynomial
    potentials the series need not converge; only moyal_rhs is exact there.
    """
    _require_wigner(W)
    if not isinstance(lambda_max, (int, np.integer)) or lambda_max < 1 or lambda_max % 2 == 0:
        raise ValueError(f"lambda_max must be a positive odd integer, got {lambda_max}")
    if lambda_max > lambda_cap:
        raise ValueError(f"lambda_max={lambda_max} exceeds the cap {lambda_cap}")
    classical = PhaseField(W.grid, transport_rhs(W, potential, mass), "wigner")
    terms = {}
    for lam in range(3, lambda_max + 1, 2):
        if _has_vanishing_derivative(potential, lam):
            continue
        terms[lam] = quantum_term(W, potential, lam)
    return LiouvilleSplit(classical, terms, lambda_max)


def complexity_rate_split(K_field: PhaseField, split: LiouvilleSplit):
    """Phase-space averages of the spreading kernel against each part of the split."""
    if not K_field.grid.same_as(split.classical.grid):
        raise GridError("kernel and split live on different grids")
    K = K_field.as_symbol().values
    pg = K_field.grid
    rc = float(np.real(pg.integrate(K * split.classical.values)))
    rq = {lam: float(np.real(pg.integrate(K * f.values))) for lam, f in split.quantum_terms.items()}
    return rc, rq


# ---------------------------------------------------------------- Krylov form

@dataclass(frozen=True)
class MnmMatrix:
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _tridiag(a, b) -> np.ndarray:
    T = np.diag(np.asarray(a, float))
    if len(a) > 1:
        T += np.diag(b[1:], 1) + np.diag(b[1:], -1)
    return T


def mnm_matrix(phi: ChainAmplitudes, a, b) -> MnmMatrix:
    """M_nm = phi_n conj((T phi)_m)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if not len(phi.phi) == len(a) == len(b):
        raise KrylovError("phi, a and b must have the same length")
    Tphi = _tridiag(a, b) @ phi.phi
    return MnmMatrix(np.outer(phi.phi, Tphi.conj()))


def wigner_rhs_krylov(pset: KrylovPhaseSet, phi: ChainAmplitudes, a, b) -> PhaseField:
    """dW/dt = i sum_nm W^K_nm (M_nm - conj(M_mn))."""
    if pset.dim != len(phi.phi):
        raise KrylovError(f"phase set has D_K={pset.dim}, amplitudes have {len(phi.phi)}")
    M = mnm_matrix(phi, a, b).entries
    C = 1j * (M - M.T.conj())
    vals = np.tensordot(C, pset.fields, axes=([0, 1], [0, 1]))
    return PhaseField(pset.grid, vals, "wigner")


def second_derivative_initial(pset: KrylovPhaseSet) -> PhaseField:
    """d^2 W / dt^2 at t = 0 for phi(0) = e_0:
    -2 b1^2 (W00 - W11) - 2 b1 (a1 - a0) W_(01) - 2 b1 b2 W_(02),
    where W_(nm) = (W_nm + W_mn) / 2. Terms past the end of the chain are dropped."""
    a, b, F, D = pset.basis.a, pset.basis.b, pset.fields, pset.dim
    if D < 2:
        return PhaseField(pset.grid, np.zeros_like(F[0, 0]), "wigner")
    sym = lambda n, m: 0.5 * (F[n, m] + F[m, n])
    out = -2 * b[1] ** 2 * (F[0, 0] - F[1, 1]) - 2 * b[1] * (a[1] - a[0]) * sym(0, 1)
    if D > 2:
        out = out - 2 * b[1] * b[2] * sym(0, 2)
    return PhaseField(pset.grid, out, "wigner")
