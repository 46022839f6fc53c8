"""Lanczos recursions for states (H) and operators (Liouvillian [H, .])."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .gridcore import Grid1D, GridError
from .quantum import (
    OperatorMatrix,
    QuantumError,
    SpectralDecomposition,
    StateVector,
    eigendecompose,
    hs_inner,
)


class KrylovError(ValueError):
    pass


@dataclass(frozen=True)
class KrylovStateBasis:
    grid: Grid1D
    vectors: list
    a: np.ndarray
    b: np.ndarray  # b[0] = 0

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def onb(self) -> np.ndarray:
        """(D_K, N) array of basis vectors in orthonormal position coordinates."""
        return np.array([v.onb() for v in self.vectors])

    def tridiagonal(self) -> np.ndarray:
        D = self.dim
        T = np.diag(self.a).astype(float)
        if D > 1:
            T += np.diag(self.b[1:], 1) + np.diag(self.b[1:], -1)
        return T

    def polynomials(self, E) -> np.ndarray:
        """P_n(E) for n < D_K from b_{n+1} P_{n+1} = (E - a_n) P_n - b_n P_{n-1}."""
        E = np.atleast_1d(np.asarray(E, dtype=float))
        P = np.zeros((self.dim, E.size))
        P[0] = 1.0
        for n in range(self.dim - 1):
            prev = P[n - 1] if n > 0 else 0.0
            P[n + 1] = ((E - self.a[n]) * P[n] - self.b[n] * prev) / self.b[n + 1]
        return P


@dataclass(frozen=True)
class KrylovOperatorBasis:
    grid: Grid1D
    operators: list
    b: np.ndarray  # b[0] = 0

    @property
    def dim(self) -> int:
        return len(self.operators)

    def tridiagonal(self) -> np.ndarray:
        D = self.dim
        T = np.zeros((D, D))
        if D > 1:
            T += np.diag(self.b[1:], 1) + np.diag(self.b[1:], -1)
        return T


@dataclass(frozen=True)
class ChainAmplitudes:
    phi: np.ndarray
    t: float = 0.0

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.phi) ** 2

    @property
    def total(self) -> float:
        return float(np.sum(self.probabilities))


def _orthogonalize(v, Q, passes=2):
    """Two Gram-Schmidt passes of v against the rows of Q (orthonormal)."""
    for _ in range(passes):
        if len(Q):
            v = v - Q.T @ (Q.conj() @ v)
    return v


def _filtered_coords(c: np.ndarray, cutoff: float) -> np.ndarray:
    c = np.where(np.abs(c) < cutoff * np.max(np.abs(c)), 0.0, c)
    return c / np.linalg.norm(c)


def lanczos_state(H: OperatorMatrix, psi0: StateVector, k_max: int | None = None,
                  tol: float = 1e-10, spectrum: SpectralDecomposition | None = None,
                  seed_cutoff: float = 1e-13) -> KrylovStateBasis:
    """Lanczos with full reorthogonalization from |psi0>.

    Stops when b_n < tol * ||H||_2 (treated as exact closure) or at k_max.

    The recursion runs in the energy eigenbasis. Seed components smaller than
    seed_cutoff times the largest one are set to zero first: on a grid, H has
    eigenvalues far above the physical band, and roundoff left in those modes
    would grow by roughly ||H|| / b_n at every step.
    """
    if tol <= 0:
        raise KrylovError("tol must be positive")
    if not psi0.is_normalized():
        raise QuantumError("psi0 must be normalized")
    if not H.grid.same_as(psi0.grid):
        raise GridError("H and psi0 live on different grids")
    N = H.grid.N
    k_max = N if k_max is None else k_max
    if not 1 <= k_max <= N:
        raise KrylovError(f"k_max must lie in [1, {N}]")
    spec = spectrum if spectrum is not None else eigendecompose(H)
    E = spec.eigenvalues
    scale = float(np.max(np.abs(E)))
    v = _filtered_coords(spec.overlaps(psi0), seed_cutoff)
    Q = np.zeros((0, N), dtype=complex)
    a, b = [], [0.0]
    while True:
        Q = np.vstack([Q, v])
        w = E * v
        a.append(float(np.real(np.vdot(v, w))))
        if len(a) == k_max:
            break
        w = w - a[-1] * v
        if len(Q) > 1:
            w = w - b[-1] * Q[-2]
        w = _orthogonalize(w, Q)
        bn = float(np.linalg.norm(w))
        if bn < tol * scale:
            break
        b.append(bn)
        v = w / bn
    X = Q @ spec.eigenvectors.T  # rows: position-basis coordinates
    vecs = [StateVector.from_onb(H.grid, x) for x in X]
    return KrylovStateBasis(H.grid, vecs, np.array(a), np.array(b))


def liouvillian(H: OperatorMatrix, O: np.ndarray) -> np.ndarray:
    return H.entries @ O - O @ H.entries


def lanczos_operator(H: OperatorMatrix, O0: OperatorMatrix, k_max: int | None = None,
                     tol: float = 1e-10, spectrum: SpectralDecomposition | None = None,
                     seed_cutoff: float = 1e-13) -> KrylovOperatorBasis:
    """Operator Lanczos: A_n = L O_{n-1} - b_{n-1} O_{n-2}, b_n = ||A_n||, O_n = A_n / b_n.

    L O = [H, O] and <<A|B>> = Tr[A^dag B]/N. O0 is normalized on entry.
    Runs in the energy basis, where L is diagonal with entries E_a - E_b;
    seed entries below seed_cutoff (relative) are dropped for the same
    reason as in lanczos_state.
    """
    if tol <= 0:
        raise KrylovError("tol must be positive")
    if not O0.is_hermitian(1e-10):
        raise KrylovError("O0 must be Hermitian")
    nrm = O0.hs_norm()
    if nrm == 0:
        raise KrylovError("O0 has zero Hilbert-Schmidt norm")
    N = H.grid.N
    k_max = N * N if k_max is None else k_max
    if not 1 <= k_max <= N * N:
        raise KrylovError(f"k_max must lie in [1, {N * N}]")
    spec = spectrum if spectrum is not None else eigendecompose(H)
    E = spec.eigenvalues
    V = spec.eigenvectors
    Lw = (E[:, None] - E[None, :]).ravel()
    scale = float(np.max(np.abs(Lw))) or 1.0
    v = _filtered_coords((V.conj().T @ O0.entries @ V).ravel(), seed_cutoff)
    Q = np.zeros((0, N * N), dtype=complex)
    b = [0.0]
    while True:
        Q = np.vstack([Q, v])
        if len(Q) == k_max:
            break
        w = Lw * v
        if len(Q) > 1:
            w = w - b[-1] * Q[-2]
        w = _orthogonalize(w, Q)
        bn = float(np.linalg.norm(w))
        if bn < tol * scale:
            break
        b.append(bn)
        v = w / bn
    mats = []
    for k, x in enumerate(Q):
        M = np.sqrt(N) * V @ x.reshape(N, N) @ V.conj().T
        mats.append(OperatorMatrix(H.grid, M, hermitian=(k % 2 == 0)))
    return KrylovOperatorBasis(H.grid, mats, np.array(b))


def amplitudes(basis: KrylovStateBasis, psi_t: StateVector, t: float = 0.0) -> ChainAmplitudes:
    if not basis.grid.same_as(psi_t.grid):
        raise GridError("basis and state live on different grids")
    return ChainAmplitudes(basis.onb().conj() @ psi_t.onb(), t)


def operator_amplitudes(basis: KrylovOperatorBasis, O_t: OperatorMatrix, t: float = 0.0) -> ChainAmplitudes:
    return ChainAmplitudes(np.array([hs_inner(O, O_t) for O in basis.operators]), t)


def chain_evolve(a, b, t: float) -> ChainAmplitudes:
    """phi(t) = exp(-i T t) e_0 with T the (a, b) tridiagonal matrix."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        raise KrylovError(f"a has length {len(a)}, b has length {len(b)}")
    if len(b) and b[0] != 0:
        raise KrylovError("b[0] must be 0")
    if len(a) == 1:
        return ChainAmplitudes(np.array([np.exp(-1j * a[0] * t)]), t)
    E, V = eigh_tridiagonal(a, b[1:])
    phi = V @ (np.exp(-1j * E * t) * V[0])
    return ChainAmplitudes(phi, t)


def operator_chain_evolve(b, t: float) -> ChainAmplitudes:
    """<<O_n|O(t)>> for O(t) = e^{iHt} O e^{-iHt}: phi(t) = exp(i T t) e_0."""
    b = np.asarray(b, dtype=float)
    return chain_evolve(np.zeros_like(b), b, -t)


def tridiagonal_moments(a, b, k_max: int) -> np.ndarray:
    """(T^k)_{00} for k = 0..k_max."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    T = np.diag(a)
    if len(a) > 1:
        T += np.diag(b[1:], 1) + np.diag(b[1:], -1)
    e = np.zeros(len(a))
    e[0] = 1
    out, v = [], e.copy()
    for _ in range(k_max + 1):
        out.append(v[0])
        v = T @ v
    return np.array(out)
