"""Single phase space: Weyl symbols, Wigner functions, Krylov phase functions.

Conventions (hbar = 1):

* A Weyl symbol is O(q,p) = 2 * int dy e^{2ipy} <q-y|O|q+y>.  On the grid this
  is 2 * sum_j e^{2 pi i k j / N} M[i-j, i+j] with M in the orthonormal
  position basis and a zero boundary (pairs leaving the box are dropped).
* A Wigner-normalized field is a symbol divided by 2 pi.
* Diagonal (multiplication) operators f(Q) are mapped to their sampled
  diagonal f(q_i).  The even-separation kernel cannot resolve them: it sees
  only the j = 0 term and would return 2 f(q_i).
* Non-diagonal operators must be confined (small boundary mass) and band
  limited to |p| < pi N / (2L) for the transform to be faithful.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from pathlib import Path
from typing import Callable

import numpy as np

from .gridcore import (
    BOUNDARY_TOL,
    BoundaryError,
    ChordGrid,
    Grid1D,
    GridError,
    PhaseGrid,
    chord_grid,
    operator_boundary_mass,
    phase_grid,
)
from .quantum import OperatorMatrix, StateVector, build_hamiltonian

NORMALIZATIONS = ("symbol", "wigner")
TWO_PI = 2 * np.pi


class NormalizationError(ValueError):
    pass


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseField:
    """Complex field on the (q, p) grid, q-major.

    ``source`` is optional provenance used for exact algebra: either the
    OperatorMatrix whose Weyl symbol equals ``values`` exactly, or an analytic
    callable f(q, p) that ``values`` samples.
    """

    grid: PhaseGrid
    values: np.ndarray
    normalization: str = "symbol"
    source: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise NormalizationError(f"unknown normalization tag {self.normalization!r}")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.N, self.grid.N):
            raise GridError(f"field has shape {v.shape}, grid has N={self.grid.N}")
        object.__setattr__(self, "values", v)

    @property
    def base(self) -> Grid1D:
        return self.grid.base

    def integrate(self) -> complex:
        return complex(self.grid.integrate(self.values))

    def overlap(self, other: "PhaseField") -> complex:
        """Phase-space integral of the pointwise product (no conjugation)."""
        _check_grid(self, other)
        return complex(self.grid.integrate(self.values * other.values))

    def imag_error(self) -> float:
        scale = max(np.max(np.abs(self.values)), 1e-300)
        return float(np.max(np.abs(self.values.imag)) / scale)

    def is_real(self, tol=1e-9) -> bool:
        return self.imag_error() <= tol

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values, normalization=None, source=None) -> "PhaseField":
        return PhaseField(self.grid, values, normalization or self.normalization, source)

    def scale(self, c) -> "PhaseField":
        src = self.source.scale(c) if isinstance(self.source, OperatorMatrix) else None
        return PhaseField(self.grid, c * self.values, self.normalization, src)

    def conj(self) -> "PhaseField":
        src = self.source.H if isinstance(self.source, OperatorMatrix) else None
        return PhaseField(self.grid, self.values.conj(), self.normalization, src)

    def _combine(self, other, sign):
        _check_grid(self, other)
        tag = "wigner" if "wigner" in (self.normalization, other.normalization) else "symbol"
        src = None
        if isinstance(self.source, OperatorMatrix) and isinstance(other.source, OperatorMatrix):
            src = self.source + other.source.scale(sign)
        return PhaseField(self.grid, self.values + sign * other.values, tag, src)

    def __add__(self, other: "PhaseField") -> "PhaseField":
        return self._combine(other, 1)

    def __sub__(self, other: "PhaseField") -> "PhaseField":
        return self._combine(other, -1)

    def as_symbol(self) -> "PhaseField":
        """Rescale a Wigner-normalized field to symbol normalization."""
        if self.normalization == "symbol":
            return self
        return self.with_values(TWO_PI * self.values, "symbol", _scaled_source(self.source, TWO_PI))

    def as_wigner(self) -> "PhaseField":
        if self.normalization == "wigner":
            return self
        return self.with_values(self.values / TWO_PI, "wigner", _scaled_source(self.source, 1 / TWO_PI))


def _scaled_source(src, c):
    return src.scale(c) if isinstance(src, OperatorMatrix) else None


def _check_grid(a, b):
    if not a.grid.same_as(b.grid):
        raise GridError("fields live on different grids")


# ----------------------------------------------------------------- kernels

@lru_cache(maxsize=16)
def _pair_indices(N: int):
    """Row i, separation j and the valid (i-j, i+j) pairs inside the box."""
    i = np.arange(N)[:, None]
    j = np.arange(-N // 2, N // 2)[None, :]
    a, b = i - j, i + j
    valid = (a >= 0) & (a < N) & (b >= 0) & (b < N)
    ii = np.broadcast_to(i, valid.shape)[valid]
    jj = np.broadcast_to(j, valid.shape)[valid] % N
    return ii, jj, a[valid], b[valid]


@lru_cache(maxsize=16)
def _half_band_projector(N: int) -> np.ndarray:
    kappa = np.fft.fftfreq(N, d=1.0 / N)
    mask = ((kappa >= -N // 4) & (kappa < N // 4)).astype(float)
    F = np.fft.fft(np.eye(N), axis=0, norm="ortho")
    B = F.conj().T @ (mask[:, None] * F)
    B.setflags(write=False)
    return B


def half_band_projector(grid: Grid1D) -> OperatorMatrix:
    """Projector onto plane waves with |p| below the phase-grid band limit."""
    return OperatorMatrix(grid, _half_band_projector(grid.N).copy(), hermitian=True)


def _is_diagonal(M: np.ndarray) -> bool:
    off = M - np.diag(np.diag(M))
    return np.max(np.abs(off)) <= 1e-13 * max(np.max(np.abs(M)), 1e-300)


def symbol_kernel(M: np.ndarray) -> np.ndarray:
    """2 sum_j e^{2 pi i k j/N} M[i-j, i+j], k = -N/2..N/2-1, one FFT per row."""
    N = M.shape[0]
    ii, jj, a, b = _pair_indices(N)
    R = np.zeros((N, N), dtype=complex)
    R[ii, jj] = M[a, b]
    return 2 * N * np.fft.fftshift(np.fft.ifft(R, axis=1), axes=1)


def _quantize_kernel(F: np.ndarray) -> np.ndarray:
    N = F.shape[0]
    c = np.fft.fft(np.fft.ifftshift(F, axes=1), axis=1) / (2 * N)
    ii, jj, a, b = _pair_indices(N)
    C = np.zeros((N, N), dtype=complex)
    C[a, b] = c[ii, jj]
    B = _half_band_projector(N)
    return 2 * B @ C @ B


# ------------------------------------------------------------- transforms

def weyl_transform(O: OperatorMatrix, check: bool = True) -> PhaseField:
    """Weyl symbol of O on the phase grid (symbol normalization)."""
    M = O.entries
    pg = phase_grid(O.grid)
    if _is_diagonal(M):
        vals = np.repeat(np.diag(M)[:, None], O.grid.N, axis=1)
    else:
        if check:
            m = operator_boundary_mass(M)
            if m > BOUNDARY_TOL:
                raise BoundaryError(
                    f"operator boundary-mass diagnostic {m:.3e} exceeds {BOUNDARY_TOL:.0e}")
        vals = symbol_kernel(M)
    if O.hermitian or O.is_hermitian(1e-12):
        vals = vals.real.astype(complex)
    return PhaseField(pg, vals, "symbol", O)


def weyl_quantize(fld: PhaseField) -> OperatorMatrix:
    """Operator whose Weyl symbol is the field, via the half-band inverse.

    Wigner-normalized fields are treated as W = rho / (2 pi) and return rho.
    Exact inverse of weyl_transform on confined, band-limited operators;
    the constant symbol 1 maps to the half-band projector.
    """
    vals = fld.values * (TWO_PI if fld.normalization == "wigner" else 1.0)
    M = _quantize_kernel(vals)
    herm = bool(np.max(np.abs(vals.imag)) <= 1e-12 * max(np.max(np.abs(vals)), 1e-300))
    if herm:
        M = 0.5 * (M + M.conj().T)
    return OperatorMatrix(fld.base, M, hermitian=herm)


def value_operator(fld: PhaseField) -> OperatorMatrix:
    """Operator whose Weyl symbol equals ``fld.values`` as numbers."""
    if isinstance(fld.source, OperatorMatrix):
        return fld.source
    op = weyl_quantize(fld)
    if fld.normalization == "wigner":
        op = op.scale(1 / TWO_PI)
    return op


def symbol_field(grid: Grid1D, f: Callable) -> PhaseField:
    """Sample an analytic symbol f(q, p) on the phase grid."""
    pg = phase_grid(grid)
    Q, P = pg.mesh()
    vals = np.broadcast_to(np.asarray(f(Q, P), dtype=complex), Q.shape).copy()
    return PhaseField(pg, vals, "symbol", f)


def hamiltonian_symbol(grid: Grid1D, potential: Callable) -> PhaseField:
    m = grid.mass
    return symbol_field(grid, lambda q, p: p ** 2 / (2 * m) + potential(q))


def hamiltonian_field(grid: Grid1D, potential: Callable) -> PhaseField:
    """Sampled p^2/2m + V(q), carrying the grid Hamiltonian as its operator.

    Star products with this field go through the same matrix that generates
    the time evolution, so rates agree with finite differences of evolved
    states. The re-quantized sampled symbol differs from that matrix once
    the state develops weight near the edge of the half band.
    """
    sym = hamiltonian_symbol(grid, potential)
    return PhaseField(sym.grid, sym.values, "symbol", build_hamiltonian(grid, potential))


def wigner_of_state(psi: StateVector) -> PhaseField:
    """W(q,p) = (1/pi) int dy e^{2ipy} psi(q-y) psi*(q+y)."""
    if not psi.is_normalized():
        raise ValueError("state must be normalized")
    psi.check_boundary()
    rho = psi.projector()
    vals = symbol_kernel(rho.entries).real / TWO_PI
    return PhaseField(phase_grid(psi.grid), vals, "wigner", rho.scale(1 / TWO_PI))


def wigner_of_density(rho: OperatorMatrix, check: bool = True) -> PhaseField:
    return weyl_transform(rho, check).as_wigner()


def marginals(W: PhaseField):
    """(int W dp, int W dq) on the q and p axes."""
    return (W.grid.dp * W.values.sum(axis=1), W.base.dx * W.values.sum(axis=0))


def momentum_density(psi: StateVector, p_points) -> np.ndarray:
    """|psi~(p)|^2 by direct quadrature of the Fourier integral."""
    q = psi.grid.q_points
    kern = np.exp(-1j * np.outer(p_points, q)) / np.sqrt(TWO_PI)
    return np.abs(psi.grid.dx * kern @ psi.amplitudes) ** 2


# ----------------------------------------------------- parity, displacement

def _half_index(grid: Grid1D, q: float) -> int:
    s = (q + grid.L / 2) / (grid.dx / 2)
    si = int(round(s))
    if abs(s - si) > 1e-9 * max(1.0, abs(s)):
        raise GridError(f"q={q} is not on the grid or half grid")
    return si


def parity_operator(grid: Grid1D, x, periodic: bool = True) -> OperatorMatrix:
    """Displaced parity Pi_x: |y> -> |2q - y> e^{2ip(q - y)}.

    q must lie on the grid or half grid. With ``periodic`` the reflection
    wraps around the box, which keeps Pi_x exactly Hermitian and involutive
    when p is a multiple of pi/L. Without it, images leaving the box are
    dropped, which matches the zero boundary of the Weyl kernel.
    """
    q, p = x
    N = grid.N
    s = _half_index(grid, q)
    b = np.arange(N)
    a = s - b
    phase = np.exp(1j * p * (s - 2 * b) * grid.dx)
    M = np.zeros((N, N), dtype=complex)
    if periodic:
        M[a % N, b] = phase
    else:
        ok = (a >= 0) & (a < N)
        M[a[ok], b[ok]] = phase[ok]
    return OperatorMatrix(grid, M, hermitian=True)


def displacement_operator(grid: Grid1D, xi) -> OperatorMatrix:
    """exp[i(xi_p Q - xi_q P)]: |y> -> |y + xi_q> e^{i xi_p (y + xi_q/2)}.

    xi_q must be a whole number of grid steps; the shift wraps periodically.
    """
    xq, xp = xi
    n = xq / grid.dx
    ni = int(round(n))
    if abs(n - ni) > 1e-9 * max(1.0, abs(n)):
        raise GridError(f"xi_q={xq} is not a whole number of grid steps")
    N = grid.N
    b = np.arange(N)
    M = np.zeros((N, N), dtype=complex)
    M[(b + ni) % N, b] = np.exp(1j * xp * (grid.q_points + xq / 2))
    return OperatorMatrix(grid, M)


@dataclass(frozen=True)
class ChordField:
    grid: ChordGrid
    values: np.ndarray  # (xi_q, xi_p)


def characteristic_function(fld: PhaseField) -> ChordField:
    """W~(xi) = int W(x) e^{-i <x, xi>_s} dx on the chord grid."""
    pg = fld.grid
    cg = chord_grid(pg.base)
    Eq = np.exp(1j * np.outer(cg.xi_q_points, pg.p_points))    # e^{+i xi_q p}
    Ep = np.exp(-1j * np.outer(pg.q_points, cg.xi_p_points))   # e^{-i q xi_p}
    vals = pg.cell_area * Eq @ fld.values.T @ Ep
    return ChordField(cg, vals)


def characteristic_from_density(rho: OperatorMatrix) -> ChordField:
    """Tr[rho T_xi^dag] on the chord grid (oracle for characteristic_function)."""
    cg = chord_grid(rho.grid)
    out = np.empty((cg.N, cg.N), dtype=complex)
    for a, xq in enumerate(cg.xi_q_points):
        for b, xp in enumerate(cg.xi_p_points):
            T = displacement_operator(rho.grid, (xq, xp)).entries
            out[a, b] = np.vdot(T, rho.entries)  # Tr[T^dag rho]
    return ChordField(cg, out)


# ------------------------------------------------------ Krylov phase set

@dataclass(frozen=True)
class KrylovPhaseSet:
    """W^K_nm = Weyl transform of |K_n><K_m| / (2 pi), for all n, m."""

    basis: object
    fields: np.ndarray  # (D_K, D_K, N, N)

    @property
    def dim(self) -> int:
        return self.fields.shape[0]

    @property
    def grid(self) -> PhaseGrid:
        return phase_grid(self.basis.grid)

    def field(self, n: int, m: int) -> PhaseField:
        src = self.basis.vectors[n].projector(self.basis.vectors[m]).scale(1 / TWO_PI)
        return PhaseField(self.grid, self.fields[n, m], "wigner", src)

    def hermitian_error(self) -> float:
        f = self.fields
        return float(np.max(np.abs(f - np.conj(np.swapaxes(f, 0, 1)))))


def krylov_phase_set(basis) -> KrylovPhaseSet:
    vecs = basis.vectors
    for v in vecs:
        v.check_boundary()
    D = len(vecs)
    N = basis.grid.N
    onb = np.array([v.onb() for v in vecs])
    out = np.empty((D, D, N, N), dtype=complex)
    for n in range(D):
        for m in range(n, D):
            out[n, m] = symbol_kernel(np.outer(onb[n], onb[m].conj())) / TWO_PI
            if m != n:
                out[m, n] = out[n, m].conj()
            else:
                out[n, n] = out[n, n].real
    out.setflags(write=False)
    return KrylovPhaseSet(basis, out)


def spreading_operator(basis) -> OperatorMatrix:
    onb = np.array([v.onb() for v in basis.vectors])
    n = np.arange(len(onb))
    K = (onb.T * n) @ onb.conj()
    return OperatorMatrix(basis.grid, K, hermitian=True)


def spreading_kernel(pset: KrylovPhaseSet) -> PhaseField:
    """K(q,p) = 2 pi sum_n n W^K_nn, the symbol of sum_n n |K_n><K_n|."""
    n = np.arange(pset.dim)
    vals = TWO_PI * np.tensordot(n, np.einsum("nnij->nij", pset.fields), axes=1)
    return PhaseField(pset.grid, vals.real.astype(complex), "symbol", spreading_operator(pset.basis))


def antisymmetric_neighbor(pset: KrylovPhaseSet, H: OperatorMatrix, n: int) -> PhaseField:
    """W^K_[n(n+1)] rebuilt from [P_n, H] and the lower antisymmetric pair.

    From the three-term recursion,
    [P_n, H] = 2 b_{n+1} P_[n(n+1)] + 2 b_n P_[n(n-1)], so
    W^K_[n(n+1)] = (1/(2 pi b_{n+1})) int dy e^{2ipy} <q-y|[P_n, H] - 2 b_n P_[n(n-1)]|q+y>.
    The bracket [nm] means (nm - mn)/2.
    """
    basis = pset.basis
    if not 0 <= n < pset.dim - 1:
        raise IndexError(f"n={n} needs n+1 < D_K={pset.dim}")
    K = [v.onb() for v in basis.vectors]
    Pn = np.outer(K[n], K[n].conj())
    comm = Pn @ H.entries - H.entries @ Pn
    if n > 0:
        anti = 0.5 * (np.outer(K[n], K[n - 1].conj()) - np.outer(K[n - 1], K[n].conj()))
        comm = comm - 2 * basis.b[n] * anti
    vals = symbol_kernel(comm) / (2 * TWO_PI * basis.b[n + 1])
    return PhaseField(pset.grid, vals, "wigner")


def generating_function(pset: KrylovPhaseSet, mu1: complex, mu2: complex,
                        tail_tol: float = 1e-10) -> PhaseField:
    """G^K(mu; x) = sum_{m,n} mu1^m mu2^n / sqrt(m! n!) W^K_nm.

    Its phase-space integral is the truncated series of e^{mu1 mu2}; the
    neglected tail sum_{n >= D_K} |mu1 mu2|^n / n! must stay below tail_tol.
    """
    D = pset.dim
    z = abs(mu1 * mu2)
    tail, term = 0.0, z ** D / factorial(D)
    k = D
    while term > 1e-300 and k < D + 400:
        tail += term
        k += 1
        term *= z / k
        if term < 1e-20 * max(tail, 1e-300):
            break
    if tail > tail_tol:
        raise TruncationError(f"generating-function tail {tail:.2e} exceeds {tail_tol:.0e}")
    m = np.arange(D)
    norm = np.sqrt(np.array([float(factorial(int(i))) for i in m]))
    c1 = mu1 ** m / norm  # weight of second index
    c2 = mu2 ** m / norm  # weight of first index
    vals = np.einsum("n,m,nmij->ij", c2, c1, pset.fields)
    return PhaseField(pset.grid, vals, "wigner")


def truncated_exp(z: complex, D: int) -> complex:
    return complex(sum(z ** k / factorial(k) for k in range(D)))


# ------------------------------------------------------- serialization

def save_field(fld: PhaseField, prefix) -> tuple[Path, Path]:
    """Write <prefix>.bin (real plane then imaginary plane, float64, q-major)
    and <prefix>.json with the grid metadata."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    binp, meta = prefix.with_suffix(".bin"), prefix.with_suffix(".json")
    planes = np.stack([fld.values.real, fld.values.imag]).astype("<f8")
    binp.write_bytes(planes.tobytes(order="C"))
    g = fld.base
    meta.write_text(json.dumps({
        "N": g.N, "L": g.L, "mass": g.mass,
        "normalization": fld.normalization,
        "axis_order": ["q", "p"],
        "planes": ["real", "imag"],
        "dtype": "float64-le",
        "p_spacing": "pi/L",
    }, indent=2))
    return binp, meta


def load_field(prefix) -> PhaseField:
    prefix = Path(prefix)
    meta = json.loads(prefix.with_suffix(".json").read_text())
    N = int(meta["N"])
    raw = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype="<f8").reshape(2, N, N)
    g = Grid1D(N, float(meta["L"]), float(meta["mass"]))
    return PhaseField(phase_grid(g), raw[0] + 1j * raw[1], meta["normalization"])


def slice_rows(fld: PhaseField, axis: str = "q", index: int | None = None):
    """A 1D cut through the field: fixed p (axis='q') or fixed q (axis='p')."""
    N = fld.grid.N
    index = N // 2 if index is None else index
    if axis == "q":
        return fld.grid.q_points, fld.values[:, index]
    if axis == "p":
        return fld.grid.p_points, fld.values[index, :]
    raise ValueError("axis must be 'q' or 'p'")
