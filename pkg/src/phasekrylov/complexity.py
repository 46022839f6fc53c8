"""Complexity measures built on Krylov amplitudes and Wigner functions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .gridcore import GridError
from .krylov import ChainAmplitudes, KrylovStateBasis
from .quantum import QuantumError, SpectralDecomposition, StateVector
from .wigner import TWO_PI, KrylovPhaseSet, NormalizationError, PhaseField, wigner_of_state

TRACE_KINDS = ("krylov_direct", "krylov_phase", "generalized_k", "harmonics", "cost_generic_basis")


class ComplexityError(ValueError):
    pass


@dataclass(frozen=True)
class ComplexityTrace:
    times: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in TRACE_KINDS:
            raise ValueError(f"unknown trace kind {self.kind!r}")
        t = np.asarray(self.times, float)
        v = np.asarray(self.values, float)
        if t.shape != v.shape:
            raise ValueError("times and values differ in length")
        # quadrature roundoff can leave values a hair below zero
        if np.any(v < -1e-9):
            raise ComplexityError(f"negative complexity {v.min():.3e}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", np.maximum(v, 0.0))


@dataclass(frozen=True)
class SpreadingDistribution:
    support: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, float)
        if np.any(p < -1e-12):
            raise ComplexityError("negative probability")
        if abs(p.sum() - 1) > 1e-8:
            raise ComplexityError(f"probabilities sum to {p.sum():.10f}")
        object.__setattr__(self, "probabilities", p)

    def moment(self, k: int) -> float:
        return float(np.sum(self.support.astype(float) ** k * self.probabilities))


# ---------------------------------------------------------------- Krylov state complexity

def complexity_direct(phi: ChainAmplitudes) -> float:
    """sum_n n |phi_n|^2."""
    return float(np.sum(np.arange(len(phi.phi)) * phi.probabilities))


def complexity_phase(W_t: PhaseField, K_field: PhaseField) -> float:
    """Phase-space average of the spreading kernel over W_t."""
    if W_t.normalization != "wigner":
        raise NormalizationError("W_t must be Wigner-normalized")
    if not W_t.grid.same_as(K_field.grid):
        raise GridError("state and kernel live on different grids")
    return float(np.real(W_t.overlap(K_field.as_symbol())))


def probabilities_phase(pset: KrylovPhaseSet, W_t: PhaseField) -> np.ndarray:
    """p_n = 2 pi int W^K_nn W_t."""
    if W_t.normalization != "wigner":
        raise NormalizationError("W_t must be Wigner-normalized")
    pg = pset.grid
    diag = np.einsum("nnij->nij", pset.fields)
    return np.real(TWO_PI * pg.cell_area * np.einsum("nij,ij->n", diag, W_t.values))


def generalized_complexity(phi: ChainAmplitudes, k: int) -> float:
    """sum_n n^k |phi_n|^2, k >= 1."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ComplexityError("k must be a positive integer (k = 0 is the total probability)")
    n = np.arange(len(phi.phi), dtype=float)
    return float(np.sum(n ** k * phi.probabilities))


def spreading_distribution(phi: ChainAmplitudes) -> SpreadingDistribution:
    return SpreadingDistribution(np.arange(len(phi.phi)), phi.probabilities)


def early_time_fit(times, values) -> float:
    """Least-squares beta for values ~ beta t^2."""
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    return float(np.sum(v * t ** 2) / np.sum(t ** 4))


# ---------------------------------------------------------------- long-time average

def long_time_average(basis: KrylovStateBasis, spec: SpectralDecomposition, psi0: StateVector,
                      support_tol: float = 1e-14, degeneracy_tol: float = 1e-8) -> float:
    """sum_{a,n} n |<E_a|psi0>|^2 |<E_a|K_n>|^2.

    Assumes no two occupied levels coincide: with a degeneracy the cross terms
    no longer average out and the formula is wrong.
    """
    c = np.abs(spec.overlaps(psi0)) ** 2
    occ = np.nonzero(c > support_tol * c.max())[0]
    E = np.sort(spec.eigenvalues[occ])
    if len(E) > 1:
        gap = np.min(np.diff(E))
        scale = max(1.0, float(np.max(np.abs(E))))
        if gap < degeneracy_tol * scale:
            raise ComplexityError(f"degenerate levels on the seed's support (gap {gap:.2e})")
    Kn = np.abs(spec.eigenvectors.conj().T @ basis.onb().T) ** 2   # [a, n]
    n = np.arange(basis.dim)
    return float(np.sum(c[:, None] * Kn * n[None, :]))


# ---------------------------------------------------------------- generic-basis cost

def _check_orthonormal(vectors, tol=1e-8) -> np.ndarray:
    X = np.array([v.onb() for v in vectors])
    G = X.conj() @ X.T
    err = np.max(np.abs(G - np.eye(len(X))))
    if err > tol:
        raise ComplexityError(f"basis is not orthonormal (error {err:.2e})")
    return X


def cost_in_basis(basis_vectors, W_t: PhaseField) -> float:
    """2 pi sum_n n int W^B_nn W_t, with W^B_nn the Wigner function of the n-th vector."""
    if W_t.normalization != "wigner":
        raise NormalizationError("W_t must be Wigner-normalized")
    _check_orthonormal(basis_vectors)
    total = 0.0
    for n, v in enumerate(basis_vectors):
        if n == 0:
            continue
        total += n * np.real(wigner_of_state(v).overlap(W_t))
    return float(TWO_PI * total)


def cost_direct(basis_vectors, psi_t: StateVector) -> float:
    """sum_n n |<B_n|psi_t>|^2, the Hilbert-space form of cost_in_basis."""
    X = _check_orthonormal(basis_vectors)
    amp = X.conj() @ psi_t.onb()
    return float(np.sum(np.arange(len(X)) * np.abs(amp) ** 2))


def random_rotated_basis(kbasis: KrylovStateBasis, rng: np.random.Generator) -> list:
    """Keep B_0 = K_0 and rotate K_1..K_{D-1} by a Haar-random unitary."""
    D = kbasis.dim
    X = kbasis.onb()
    if D < 3:
        return list(kbasis.vectors)
    Z = rng.normal(size=(D - 1, D - 1)) + 1j * rng.normal(size=(D - 1, D - 1))
    Q, R = np.linalg.qr(Z)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))[None, :]
    rows = np.vstack([X[:1], Q.T @ X[1:]])
    return [StateVector.from_onb(kbasis.grid, r) for r in rows]


@dataclass(frozen=True)
class MinimizationProbe:
    times: np.ndarray
    krylov_cost: np.ndarray
    min_gap: np.ndarray        # min over bases of cost - krylov cost, per time
    window_end: float          # first sampled time with a violation (inf if none)


def minimization_probe(kbasis: KrylovStateBasis, amplitudes_at, times, n_bases: int = 100,
                       rng: np.random.Generator | None = None, tol: float = 1e-8) -> MinimizationProbe:
    """Compare the Krylov cost with the cost in randomly rotated bases.

    amplitudes_at(t) returns the Krylov amplitudes phi(t). The cost in a
    rotated basis follows from the same amplitudes, because every basis here
    spans the Krylov space.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    times = np.asarray(times, float)
    D = kbasis.dim
    X = kbasis.onb()
    n = np.arange(D)
    phis = np.array([amplitudes_at(t).phi for t in times])     # [t, n]
    kc = np.abs(phis) ** 2 @ n
    gaps = np.full(len(times), np.inf)
    for _ in range(n_bases):
        B = np.array([v.onb() for v in random_rotated_basis(kbasis, rng)])
        U = B.conj() @ X.T                                      # <B_m|K_n>
        cost = np.abs(phis @ U.T) ** 2 @ n
        gaps = np.minimum(gaps, cost - kc)
    bad = np.nonzero(gaps < -tol)[0]
    end = float(times[bad[0]]) if len(bad) else float("inf")
    return MinimizationProbe(times, kc, gaps, end)


# ---------------------------------------------------------------- harmonics

ACTION_ANGLE_MAPS = {"harmonic"}


def polar_resample(W_t: PhaseField, omega: float, n_theta: int = 256, n_action: int = 128,
                   method: str = "cubic"):
    """W on an (I, theta) grid with q = sqrt(2I/(m w)) cos theta, p = sqrt(2 I m w) sin theta.

    I runs up to the largest ellipse that stays inside 0.9 of the box and of
    the momentum band. Bilinear interpolation (method="linear") leaves
    grid-aligned fourth harmonics of relative size ~1e-2; cubic removes them.
    """
    pg = W_t.grid
    m = W_t.base.mass
    qmax = 0.9 * min(-pg.q_points[0], pg.q_points[-1])
    pmax = 0.9 * min(-pg.p_points[0], pg.p_points[-1])
    I_max = min(0.5 * m * omega * qmax ** 2, 0.5 * pmax ** 2 / (m * omega))
    I = np.linspace(0.0, I_max, n_action)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    Q = np.sqrt(2 * I[:, None] / (m * omega)) * np.cos(th)[None, :]
    P = np.sqrt(2 * I[:, None] * m * omega) * np.sin(th)[None, :]
    interp = RegularGridInterpolator((pg.q_points, pg.p_points), W_t.values.real, method=method)
    vals = interp(np.stack([Q.ravel(), P.ravel()], axis=-1)).reshape(Q.shape)
    return I, th, vals


def harmonics_from_polar(I, vals) -> float:
    """sqrt(<n^2>) from W(I, theta) samples with theta uniform over [0, 2 pi)."""
    n_theta = vals.shape[1]
    Wn = np.pi * np.fft.fft(vals, axis=1) / n_theta          # W_n = pi <W e^{-in theta}>_theta
    n = np.fft.fftfreq(n_theta, d=1.0 / n_theta)
    w = np.trapezoid(np.abs(Wn) ** 2, I, axis=0)
    norm = np.sum(w)
    if norm <= 0:
        raise ComplexityError("Wigner function vanishes on the polar grid")
    return float(np.sqrt(np.sum(n ** 2 * w) / norm))


def harmonics_complexity(W_t: PhaseField, omega: float, system: str = "harmonic",
                         n_theta: int = 256, n_action: int = 128, method: str = "cubic") -> float:
    """Root second moment of the angular harmonics of W in action-angle variables."""
    if system not in ACTION_ANGLE_MAPS:
        raise ComplexityError(f"no action-angle map registered for {system!r}")
    if W_t.normalization != "wigner":
        raise NormalizationError("W_t must be Wigner-normalized")
    I, _, vals = polar_resample(W_t, omega, n_theta, n_action, method)
    return harmonics_from_polar(I, vals)
