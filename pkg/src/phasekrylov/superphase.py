"""Double phase space: transforms of superoperators and operator-growth measures.

Fields live on pairs of phase-grid points (x+, x-), stored with axis order
[i+, k+, i-, k-]. The centre x = (x+ + x-)/2 then runs over the half
lattice and the chord xi = x+ - x- has spacing (dx, pi/L) over the full
range +-L, which is what the trace identities need. Quadrature weight per
point is cell_area**2.

Conventions (hbar = 1, D = N):

* A sandwich superoperator A . B (X -> A X B) maps to A(x+) B(x-).
* A projection |A>><<B| maps to (4/D) Tr[Pi_x+ A Pi_x- B^dag] = (2 pi)^2 W_AB,
  where W_AB = Tr[Pi_x+ A Pi_x- B^dag] / (pi^2 D) is the double Wigner function.
* Pi_x is the zero-boundary displaced parity, matching the Weyl kernel.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, factorial
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .gridcore import BOUNDARY_TOL, BoundaryError, Grid1D, GridError, PhaseGrid, operator_boundary_mass, phase_grid
from .quantum import OperatorMatrix, QuantumError, SpectralDecomposition, hs_inner, identity_operator
from .wigner import TWO_PI, PhaseField, parity_operator, weyl_transform

MAX_DOUBLE_N = 64
PARITIES = ("none", "minus", "plus")


class SuperopError(ValueError):
    pass


def _guard(N: int):
    if N > MAX_DOUBLE_N:
        mb = 16 * N ** 4 / 2 ** 20
        raise GridError(f"double-phase fields need N <= {MAX_DOUBLE_N} (N={N} would use {mb:.0f} MB per field)")


# ---------------------------------------------------------------- fields

@dataclass(frozen=True)
class DoublePhaseField:
    grid: PhaseGrid
    values: np.ndarray  # [i+, k+, i-, k-]
    parity: str = "none"
    superop: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        N = self.grid.N
        _guard(N)
        if self.parity not in PARITIES:
            raise ValueError(f"unknown parity tag {self.parity!r}")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (N,) * 4:
            raise GridError(f"double field has shape {v.shape}, expected {(N,) * 4}")
        object.__setattr__(self, "values", v)

    @property
    def weight(self) -> float:
        return self.grid.cell_area ** 2

    def integrate(self) -> complex:
        return complex(self.weight * np.sum(self.values))

    def overlap(self, other: "DoublePhaseField") -> complex:
        """Integral of the pointwise product (no conjugation)."""
        _check(self, other)
        return complex(self.weight * np.vdot(other.values.conj(), self.values))

    def inner(self, other: "DoublePhaseField") -> complex:
        """Integral of conj(self) * other."""
        _check(self, other)
        return complex(self.weight * np.vdot(self.values, other.values))

    def xi_reflect(self) -> "DoublePhaseField":
        """xi -> -xi at fixed centre, i.e. swap the two endpoints."""
        return DoublePhaseField(self.grid, self.values.transpose(2, 3, 0, 1), self.parity)

    def parity_error(self) -> float:
        """Max deviation from the tagged xi-parity (0 for untagged fields)."""
        if self.parity == "none":
            return 0.0
        r = self.values.transpose(2, 3, 0, 1)
        sign = -1.0 if self.parity == "minus" else 1.0
        return float(np.max(np.abs(self.values - sign * r)))

    def imag_error(self) -> float:
        return float(np.max(np.abs(self.values.imag)) / max(np.max(np.abs(self.values)), 1e-300))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def centre_chord(self):
        """Broadcastable (q, p, xi_q, xi_p) arrays for every stored point."""
        q, p = self.grid.q_points, self.grid.p_points
        qp, pp = q[:, None, None, None], p[None, :, None, None]
        qm, pm = q[None, None, :, None], p[None, None, None, :]
        return (qp + qm) / 2, (pp + pm) / 2, qp - qm, pp - pm

    def scale(self, c) -> "DoublePhaseField":
        return DoublePhaseField(self.grid, c * self.values, self.parity,
                                None if self.superop is None else self.superop.scale(c))

    def __add__(self, other):
        _check(self, other)
        par = self.parity if self.parity == other.parity else "none"
        sop = self.superop + other.superop if self.superop is not None and other.superop is not None else None
        return DoublePhaseField(self.grid, self.values + other.values, par, sop)

    def __sub__(self, other):
        return self + other.scale(-1)


def _check(a, b):
    if not a.grid.same_as(b.grid):
        raise GridError("double fields live on different grids")


def endpoint_outer(A: PhaseField, B: PhaseField, parity="none") -> DoublePhaseField:
    """A(x+) B(x-) for two symbol-normalized single fields."""
    if not A.grid.same_as(B.grid):
        raise GridError("fields live on different grids")
    sa, sb = A.as_symbol().values, B.as_symbol().values
    return DoublePhaseField(A.grid, sa[:, :, None, None] * sb[None, None, :, :], parity)


# ---------------------------------------------------------------- superoperators

def _symbol(op: OperatorMatrix) -> PhaseField:
    return weyl_transform(op)


@dataclass(frozen=True)
class Superop:
    """Finite sum of sandwich terms c A . B and projection terms c |A>><<B|.

    Sandwich terms carry (coefficient, A, B, symbol_A, symbol_B); the symbols
    are what the double transform uses, the matrices are what the algebra
    uses. Projection terms carry (coefficient, A, B).
    """

    grid: Grid1D
    sandwiches: tuple = ()
    projections: tuple = ()

    @classmethod
    def sandwich(cls, A: OperatorMatrix, B: OperatorMatrix, A_symbol=None, B_symbol=None, c=1.0):
        sa = _symbol(A) if A_symbol is None else A_symbol
        sb = _symbol(B) if B_symbol is None else B_symbol
        return cls(A.grid, ((c, A, B, sa, sb),), ())

    @classmethod
    def projection(cls, A: OperatorMatrix, B: OperatorMatrix, c=1.0):
        return cls(A.grid, (), ((c, A, B),))

    def scale(self, c) -> "Superop":
        return Superop(self.grid,
                       tuple((c * t[0],) + t[1:] for t in self.sandwiches),
                       tuple((c * t[0],) + t[1:] for t in self.projections))

    def __add__(self, other: "Superop") -> "Superop":
        if not self.grid.same_as(other.grid):
            raise GridError("superoperators live on different grids")
        return Superop(self.grid, self.sandwiches + other.sandwiches, self.projections + other.projections)

    def __sub__(self, other):
        return self + other.scale(-1)

    def apply(self, X: OperatorMatrix) -> OperatorMatrix:
        out = np.zeros_like(X.entries)
        for c, A, B, _, _ in self.sandwiches:
            out += c * (A.entries @ X.entries @ B.entries)
        for c, A, B in self.projections:
            out += c * hs_inner(B, X) * A.entries
        return OperatorMatrix(X.grid, out)

    def __matmul__(self, other: "Superop") -> "Superop":
        """Composition: (self @ other)(X) = self(other(X))."""
        from .moyal import star

        sand, proj = [], []
        for c1, A, B, sA, sB in self.sandwiches:
            for c2, C, D, sC, sD in other.sandwiches:
                # (A . B)(C . D) = AC . DB
                sand.append((c1 * c2, A @ C, D @ B, star(sA, sC), star(sD, sB)))
            for c2, C, D in other.projections:
                # (A . B)|C>><<D| = |ACB>><<D|
                proj.append((c1 * c2, A @ C @ B, D))
        for c1, C, D in self.projections:
            for c2, A, B, _, _ in other.sandwiches:
                # |C>><<D|(A . B) = |C>><<A^dag D B^dag|
                proj.append((c1 * c2, C, A.H @ D @ B.H))
            for c2, A, B in other.projections:
                proj.append((c1 * c2 * hs_inner(D, A), C, B))
        return Superop(self.grid, tuple(sand), tuple(proj))


def identity_field(grid: Grid1D) -> PhaseField:
    return PhaseField(phase_grid(grid), np.ones((grid.N, grid.N)), "symbol", identity_operator(grid))


def identity_superop(grid: Grid1D) -> Superop:
    I = identity_operator(grid)
    one = identity_field(grid)
    return Superop.sandwich(I, I, one, one)


def commutator_superop(A: OperatorMatrix, A_symbol: PhaseField | None = None) -> Superop:
    """A^- = [A, .] = A . I - I . A."""
    I = identity_operator(A.grid)
    one = identity_field(A.grid)
    sa = _symbol(A) if A_symbol is None else A_symbol
    return Superop.sandwich(A, I, sa, one) - Superop.sandwich(I, A, one, sa)


def anticommutator_half_superop(A: OperatorMatrix, A_symbol: PhaseField | None = None) -> Superop:
    """A^+ = (A . I + I . A) / 2."""
    I = identity_operator(A.grid)
    one = identity_field(A.grid)
    sa = _symbol(A) if A_symbol is None else A_symbol
    return (Superop.sandwich(A, I, sa, one, 0.5) + Superop.sandwich(I, A, one, sa, 0.5))


# ---------------------------------------------------------------- transforms

def _endpoint_tables(N: int):
    b = np.arange(N)
    idx = 2 * b[:, None] - b[None, :]          # [i, b] -> 2i - b
    ok = (idx >= 0) & (idx < N)
    kk = np.arange(-N // 2, N // 2)
    phase = np.exp(2j * np.pi * np.outer(b, kk) / N)   # [i, k]: e^{i p_k (2 q_i-offset)}
    return np.where(ok, idx, 0), ok, kk % N, phase


def dwf_pair(A: OperatorMatrix, B: OperatorMatrix, check: bool = True) -> DoublePhaseField:
    """Double Wigner function W_AB(x+, x-) = Tr[Pi_x+ A Pi_x- B^dag] / (pi^2 D).

    Each (i+, i-) pair is one 2D FFT over the two summed position indices.
    Its double integral is <<B|A>>.
    """
    if not A.grid.same_as(B.grid):
        raise GridError("operands live on different grids")
    g = A.grid
    N = g.N
    _guard(N)
    if check:
        for name, M in (("A", A), ("B", B)):
            m = operator_boundary_mass(M.entries)
            if m > BOUNDARY_TOL:
                raise BoundaryError(f"operator {name}: boundary-mass diagnostic {m:.3e} exceeds {BOUNDARY_TOL:.0e}")
    idc, ok, ksel, ph = _endpoint_tables(N)
    # Ar[i-, b, d] = A[b, 2 i- - d];  Br[i+, b, d] = conj(B[2 i+ - b, d])
    Ar = A.entries[:, idc].transpose(1, 0, 2) * ok[:, None, :]
    Br = B.entries[idc].conj() * ok[:, :, None]
    out = np.empty((N,) * 4, dtype=complex)
    right = ph[:, None, :]  # [i-, 1, k-]
    for ip in range(N):
        F = np.fft.fft2(Ar * Br[ip][None], axes=(1, 2))[:, ksel][:, :, ksel]  # [i-, k+, k-]
        out[ip] = (F * right).transpose(1, 0, 2) * ph[ip][:, None, None]
    out /= np.pi ** 2 * N
    sop = Superop.projection(A, B, 1 / TWO_PI ** 2)
    return DoublePhaseField(phase_grid(g), out, "none", sop)


def dwt(S: Superop) -> DoublePhaseField:
    """Double Weyl transform of a superoperator, term by term."""
    g = S.grid
    _guard(g.N)
    pg = phase_grid(g)
    vals = np.zeros((g.N,) * 4, dtype=complex)
    for c, _, _, sA, sB in S.sandwiches:
        vals += c * endpoint_outer(sA, sB).values
    for c, A, B in S.projections:
        vals += c * TWO_PI ** 2 * dwf_pair(A, B).values
    return DoublePhaseField(pg, vals, "none", S)


def dwt_minus(A_field: PhaseField) -> DoublePhaseField:
    """A(x+) - A(x-): the transform of [A, .]. Odd under xi -> -xi."""
    S = A_field.as_symbol().values
    vals = S[:, :, None, None] - S[None, None, :, :]
    sop = None
    if isinstance(A_field.as_symbol().source, OperatorMatrix):
        sop = commutator_superop(A_field.as_symbol().source, A_field.as_symbol())
    return DoublePhaseField(A_field.grid, vals, "minus", sop)


def dwt_plus(A_field: PhaseField) -> DoublePhaseField:
    """(A(x+) + A(x-)) / 2: the transform of the half anticommutator. Even in xi."""
    S = A_field.as_symbol().values
    vals = 0.5 * (S[:, :, None, None] + S[None, None, :, :])
    sop = None
    if isinstance(A_field.as_symbol().source, OperatorMatrix):
        sop = anticommutator_half_superop(A_field.as_symbol().source, A_field.as_symbol())
    return DoublePhaseField(A_field.grid, vals, "plus", sop)


def reconstruct_symbol(plus: DoublePhaseField, minus: DoublePhaseField) -> np.ndarray:
    """A(x+) = A^+ + A^-/2, returned on the full endpoint lattice."""
    _check(plus, minus)
    return plus.values + 0.5 * minus.values


def dwt_star(A: DoublePhaseField, B: DoublePhaseField) -> DoublePhaseField:
    """Transform of the composed superoperator A o B.

    Works through the underlying superoperators, so both fields must carry one.
    """
    if A.superop is None or B.superop is None:
        raise SuperopError("dwt_star needs fields that carry their superoperator")
    return dwt(A.superop @ B.superop)


# ---------------------------------------------------------------- parity superoperators

def _endpoints(x, xi):
    q, p = x
    xq, xp = xi
    return (q + xq / 2, p + xp / 2), (q - xq / 2, p - xp / 2)


def parity_superop_apply(grid: Grid1D, x, xi, O: OperatorMatrix, periodic: bool = True) -> OperatorMatrix:
    """Pi_{x+} O Pi_{x-} with x+- = x +- xi/2 on the grid or half grid."""
    xp_, xm_ = _endpoints(x, xi)
    for pt in (xp_, xm_):
        k = pt[1] / (np.pi / (2 * grid.L))
        if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
            raise GridError(f"p={pt[1]} is not on the half momentum lattice")
    Pp = parity_operator(grid, xp_, periodic)
    Pm = parity_operator(grid, xm_, periodic)
    return OperatorMatrix(grid, Pp.entries @ O.entries @ Pm.entries)


def dwt_by_trace(S: Superop, points) -> np.ndarray:
    """4 tr(Pi_x+ . Pi_x- o S) at the listed endpoint indices (i+, k+, i-, k-).

    Slow oracle. Uses the raw parity kernel, so diagonal operators enter
    through their kernel value rather than their sampled diagonal.
    """
    g = S.grid
    pg = phase_grid(g)
    q, p = pg.q_points, pg.p_points
    out = []
    for ip, kp, im, km in points:
        Pp = parity_operator(g, (q[ip], p[kp]), periodic=False).entries
        Pm = parity_operator(g, (q[im], p[km]), periodic=False).entries
        val = 0j
        for c, A, B, _, _ in S.sandwiches:
            val += c * np.trace(Pp @ A.entries) * np.trace(B.entries @ Pm)
        for c, A, B in S.projections:
            val += c * np.trace(Pp @ A.entries @ Pm @ B.entries.conj().T) / g.N
        out.append(4 * val)
    return np.array(out)


# ---------------------------------------------------------------- operator Krylov functions

class OperatorKrylovPhaseSet:
    """W_nm = dwf_pair(O_n, O_m) for an operator Krylov basis, built on demand.

    A full D_K = 4 set at N = 32 is 16 fields of 16 MB each.
    """

    def __init__(self, basis):
        _guard(basis.grid.N)
        for k, O in enumerate(basis.operators):
            m = operator_boundary_mass(O.entries)
            if m > BOUNDARY_TOL:
                raise BoundaryError(f"O_{k}: boundary-mass diagnostic {m:.3e} exceeds {BOUNDARY_TOL:.0e}")
        self.basis = basis
        self._cache = {}
        self._kernel = None

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def grid(self) -> PhaseGrid:
        return phase_grid(self.basis.grid)

    def field(self, n: int, m: int) -> DoublePhaseField:
        if (n, m) not in self._cache:
            ops = self.basis.operators
            self._cache[n, m] = dwf_pair(ops[n], ops[m], check=False)
        return self._cache[n, m]

    def kernel(self) -> DoublePhaseField:
        """(2 pi)^2 sum_n n W_nn."""
        if self._kernel is None:
            vals = np.zeros((self.grid.N,) * 4, dtype=complex)
            for n in range(1, self.dim):
                vals += n * self.field(n, n).values
            self._kernel = DoublePhaseField(self.grid, TWO_PI ** 2 * vals)
        return self._kernel


def operator_krylov_phase_set(basis) -> OperatorKrylovPhaseSet:
    return OperatorKrylovPhaseSet(basis)


def _require_normalized(O: OperatorMatrix, tol=1e-8):
    n = O.hs_norm()
    if abs(n - 1) > tol:
        raise QuantumError(f"operator must be HS-normalized (norm {n:.6g})")


def operator_complexity_phase(op_set: OperatorKrylovPhaseSet, O_t: OperatorMatrix) -> float:
    """Integral of W_{O(t)} against the operator spreading kernel."""
    if not op_set.basis.grid.same_as(O_t.grid):
        raise GridError("basis and operator live on different grids")
    _require_normalized(O_t)
    W = dwf_pair(O_t, O_t)
    return float(np.real(W.overlap(op_set.kernel())))


def operator_complexity_centre(op_set: OperatorKrylovPhaseSet, O_t: OperatorMatrix) -> float:
    """sum_n n |int conj(O_n symbol) O(t) symbol|^2 / (2 pi D)^2, using single symbols only."""
    _require_normalized(O_t)
    pg = op_set.grid
    D = O_t.grid.N
    st = weyl_transform(O_t).values
    total = 0.0
    for n in range(1, op_set.dim):
        sn = weyl_transform(op_set.basis.operators[n]).values
        total += n * abs(pg.integrate(sn.conj() * st)) ** 2
    return float(total / (TWO_PI * D) ** 2)


def operator_complexity_direct(basis, O_t: OperatorMatrix) -> float:
    """sum_n n |<<O_n|O(t)>>|^2."""
    return float(sum(n * abs(hs_inner(O, O_t)) ** 2 for n, O in enumerate(basis.operators)))


# ---------------------------------------------------------------- squared commutator

def _require_hermitian(V: OperatorMatrix, name="V"):
    if V.hermiticity_error() > 1e-10:
        raise QuantumError(f"{name} must be Hermitian")


def otoc_direct(V: OperatorMatrix, O_t: OperatorMatrix) -> float:
    """<<[V, O(t)] | [V, O(t)]>>."""
    _require_hermitian(V)
    C = V.entries @ O_t.entries - O_t.entries @ V.entries
    return float(np.real(np.vdot(C, C)) / V.grid.N)


def otoc_phase(V: OperatorMatrix, O_t: OperatorMatrix) -> float:
    """Same quantity as a double-phase integral of W_{O(t)} against
    V*V(x+) + V*V(x-) - 2 V(x+) V(x-)."""
    _require_hermitian(V)
    sv = weyl_transform(V).values
    svv = weyl_transform(OperatorMatrix(V.grid, V.entries @ V.entries)).values
    W = dwf_pair(O_t, O_t)
    kern = svv[:, :, None, None] + svv[None, None, :, :] - 2 * sv[:, :, None, None] * sv[None, None, :, :]
    return float(np.real(W.weight * np.sum(W.values * kern)))


@dataclass
class GrowthBoundDiagnostic:
    c: float  # fitted so that F <= c C over the fit window
    fit_times: np.ndarray
    ratios: np.ndarray  # F / (c C) at every sample with C > floor, nan elsewhere
    max_ratio_after_fit: float
    violations: int  # samples after the fit window with ratio > 1


def growth_bound_diagnostic(times, F, C, n_fit: int = 3, floor: float = 1e-12) -> GrowthBoundDiagnostic:
    """Fit c in F(t) <= c C(t) on the first n_fit samples with C > floor and
    monitor the ratio afterwards. Reported only: c is system dependent and
    nothing guarantees the inequality outside the fit window."""
    t, F, C = (np.asarray(a, float) for a in (times, F, C))
    if not t.shape == F.shape == C.shape:
        raise ValueError("times, F and C must have equal length")
    live = np.nonzero(C > floor)[0]
    if len(live) < n_fit or n_fit < 1:
        raise ValueError(f"need at least n_fit={n_fit} samples with C > {floor:g}")
    fit = live[:n_fit]
    c = float(np.max(F[fit] / C[fit]))
    ratios = np.full_like(F, np.nan)
    if c > 0:
        ratios[live] = F[live] / (c * C[live])
    after = live[n_fit:]
    tail = ratios[after] if c > 0 else np.zeros(0)
    return GrowthBoundDiagnostic(c, t[fit], ratios, float(np.max(tail)) if len(tail) else float("nan"),
                                 int(np.sum(tail > 1.0)))


# ---------------------------------------------------------------- fidelity

def check_density(rho: OperatorMatrix, tol=1e-8):
    if rho.hermiticity_error() > 1e-10:
        raise QuantumError("density matrix must be Hermitian")
    tr = rho.trace()
    if abs(tr - 1) > tol:
        raise QuantumError(f"density matrix has trace {tr.real:.6g}")
    ev = np.linalg.eigvalsh(0.5 * (rho.entries + rho.entries.conj().T))
    if ev.min() < -tol:
        raise QuantumError(f"density matrix has eigenvalue {ev.min():.3e}")


def _commutator_powers(rho: np.ndarray, M: np.ndarray, n_max: int):
    X = [rho]
    for _ in range(n_max):
        X.append(M @ X[-1] - X[-1] @ M)
    return X


def fidelity_moments(rho_T: OperatorMatrix, M: OperatorMatrix, n_max: int) -> np.ndarray:
    """F_n = <<rho | (M^-)^n | rho>> for n = 0..n_max."""
    check_density(rho_T)
    _require_hermitian(M, "M")
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    X = _commutator_powers(rho_T.entries, M.entries, n_max)
    N = rho_T.grid.N
    return np.array([np.real(np.vdot(rho_T.entries, x)) / N for x in X])


def fidelity_moment_phase(rho_T: OperatorMatrix, M: OperatorMatrix, n: int) -> float:
    """F_n as a double-phase integral of W_rho against
    sum_k C(n,k) (-1)^k M^{n-k}(x+) M^k(x-), with M^k the symbol of the k-th power."""
    check_density(rho_T)
    _require_hermitian(M, "M")
    g = rho_T.grid
    syms = [np.ones((g.N, g.N), dtype=complex)]
    P = np.eye(g.N, dtype=complex)
    for _ in range(n):
        P = P @ M.entries
        syms.append(weyl_transform(OperatorMatrix(g, P)).values)
    W = dwf_pair(rho_T, rho_T)
    total = 0j
    for k in range(n + 1):
        kern = syms[n - k][:, :, None, None] * syms[k][None, None, :, :]
        total += comb(n, k) * (-1) ** k * np.sum(W.values * kern)
    return float(np.real(W.weight * total))


def fidelity_direct(rho0: OperatorMatrix, spec: SpectralDecomposition, M: OperatorMatrix,
                    T: float, theta: float) -> float:
    """Tr[rho~ rho0] / Tr[rho0^2], where rho~ is rho0 evolved for T, perturbed by
    exp(-i theta M), and evolved back for T."""
    check_density(rho0)
    _require_hermitian(M, "M")
    U = spec.propagator(T)
    P = expm(-1j * theta * M.entries)
    rhoT = U @ rho0.entries @ U.conj().T
    back = U.conj().T @ (P @ rhoT @ P.conj().T) @ U
    purity = np.real(np.trace(rho0.entries @ rho0.entries))
    return float(np.real(np.trace(back @ rho0.entries)) / purity)


def fidelity_resummed(moments, theta: float, purity: float, D: int) -> float:
    """(D / purity) sum_n (i theta)^n F_n / n!."""
    s = sum((1j * theta) ** n * F / factorial(n) for n, F in enumerate(moments))
    return float(np.real(D * s / purity))


def fidelity_remainder_bound(rho_T: OperatorMatrix, M: OperatorMatrix, theta: float,
                             order: int = 7, n_points: int = 41) -> float:
    """theta^order / order! times the largest |(D/purity) <<rho|(M^-)^order e^{i s M^-}|rho>>|
    over s in [0, theta]: the Lagrange bound on the truncated resummation."""
    g = rho_T.grid
    r, Mm = rho_T.entries, M.entries
    purity = np.real(np.trace(r @ r))
    E, V = np.linalg.eigh(0.5 * (Mm + Mm.conj().T))
    best = 0.0
    for s in np.linspace(0.0, theta, n_points):
        U = (V * np.exp(1j * s * E)) @ V.conj().T
        X = U @ r @ U.conj().T          # e^{i s M^-} rho
        for _ in range(order):
            X = Mm @ X - X @ Mm
        best = max(best, abs(np.vdot(r, X)) / purity)
    return float(abs(theta) ** order / factorial(order) * best)


# ---------------------------------------------------------------- serialization

def save_double_field(fld: DoublePhaseField, prefix) -> tuple[Path, Path]:
    """<prefix>.bin (real block then imaginary block, float64 LE, C order) plus a JSON sidecar."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    binp, meta = prefix.with_suffix(".bin"), prefix.with_suffix(".json")
    binp.write_bytes(np.stack([fld.values.real, fld.values.imag]).astype("<f8").tobytes())
    g = fld.grid.base
    axis = lambda name, step: {"name": name, "size": g.N, "start": None, "step": step}
    axes = [axis("q_plus", g.dx), axis("p_plus", np.pi / g.L), axis("q_minus", g.dx), axis("p_minus", np.pi / g.L)]
    for a in axes:
        a["start"] = -g.L / 2 if a["name"].startswith("q") else -np.pi * (g.N // 2) / g.L
    meta.write_text(json.dumps({"N": g.N, "L": g.L, "mass": g.mass, "parity": fld.parity,
                                "axes": axes, "planes": ["real", "imag"], "dtype": "float64-le"}, indent=2))
    return binp, meta


def load_double_field(prefix) -> DoublePhaseField:
    prefix = Path(prefix)
    meta = json.loads(prefix.with_suffix(".json").read_text())
    N = int(meta["N"])
    raw = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype="<f8").reshape((2,) + (N,) * 4)
    g = Grid1D(N, float(meta["L"]), float(meta["mass"]))
    return DoublePhaseField(phase_grid(g), raw[0] + 1j * raw[1], meta["parity"])


def chord_zero_slice(fld: DoublePhaseField) -> np.ndarray:
    """Values at xi = 0, indexed (q, p)."""
    N = fld.grid.N
    i = np.arange(N)
    return fld.values[i[:, None], i[None, :], i[:, None], i[None, :]]


def centre_zero_slice(fld: DoublePhaseField) -> np.ndarray:
    """Values at x = 0, indexed by the chord (xi_q, xi_p) = 2 (q+, p+); rows and
    columns without a mirror partner on the grid are NaN."""
    N = fld.grid.N
    out = np.full((N, N), np.nan + 0j)
    j = np.arange(1, N)
    out[1:, 1:] = fld.values[j[:, None], j[None, :], (N - j)[:, None], (N - j)[None, :]]
    return out
