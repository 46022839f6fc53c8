"""Star-product algebra and the phase-space form of the Lanczos recursion.

The star product is evaluated by the operator route: each operand is mapped
to the operator whose Weyl symbol equals its values, the operators are
multiplied, and the product is transformed back. This is exact at grid
resolution. ``star_integral_oracle`` keeps the integral kernel as a slow
cross-check for small grids.
"""
from __future__ import annotations

import numpy as np

from .gridcore import GridError
from .quantum import OperatorMatrix
from .wigner import (
    NORMALIZATIONS,
    TWO_PI,
    KrylovPhaseSet,
    NormalizationError,
    PhaseField,
    value_operator,
    weyl_transform,
)


def _result_tag(A: PhaseField, B: PhaseField) -> str:
    for f in (A, B):
        if f.normalization not in NORMALIZATIONS:
            raise NormalizationError(f"unknown normalization tag {f.normalization!r}")
    return "wigner" if "wigner" in (A.normalization, B.normalization) else "symbol"


def star(A: PhaseField, B: PhaseField, check: bool = True) -> PhaseField:
    """A * B as functions: the symbol of op(A) op(B).

    A Wigner tag on either operand is carried to the result, so products
    such as H * W stay Wigner-normalized.
    """
    if not A.grid.same_as(B.grid):
        raise GridError("star operands live on different grids")
    tag = _result_tag(A, B)
    prod = value_operator(A) @ value_operator(B)
    out = weyl_transform(prod, check=check)
    return PhaseField(A.grid, out.values, tag, prod)


def moyal_bracket(A: PhaseField, B: PhaseField, check: bool = True) -> PhaseField:
    """[A, B]_* = A * B - B * A."""
    if not A.grid.same_as(B.grid):
        raise GridError("bracket operands live on different grids")
    tag = _result_tag(A, B)
    opA, opB = value_operator(A), value_operator(B)
    comm = OperatorMatrix(A.base, opA.entries @ opB.entries - opB.entries @ opA.entries)
    out = weyl_transform(comm, check=check)
    return PhaseField(A.grid, out.values, tag, comm)


def star_genvalue_residual(H_field: PhaseField, W_ab: PhaseField, E_a: float, E_b: float) -> float:
    """max|H * W_ab - E_a W_ab| + max|W_ab * H - E_b W_ab|."""
    left = star(H_field, W_ab).values - E_a * W_ab.values
    right = star(W_ab, H_field).values - E_b * W_ab.values
    return float(np.max(np.abs(left)) + np.max(np.abs(right)))


def star_lanczos_step(H_field: PhaseField, pset: KrylovPhaseSet, n: int) -> PhaseField:
    """H * W^K_nn - a_n W^K_nn - b_n W^K_(n-1)n, which should equal b_{n+1} W^K_(n+1)n."""
    D = pset.dim
    if not 0 <= n < D:
        raise IndexError(f"n={n} out of range for D_K={D}")
    a, b = pset.basis.a, pset.basis.b
    Wnn = pset.field(n, n)
    out = star(H_field, Wnn).values - a[n] * Wnn.values
    if n > 0:
        out = out - b[n] * pset.fields[n - 1, n]
    return PhaseField(pset.grid, out, "wigner")


def star_lanczos_general(H_field: PhaseField, pset: KrylovPhaseSet, n: int, m: int, side: str = "left"):
    """Residual of H * W_nm = a_n W_nm + b_{n+1} W_(n+1)m + b_n W_(n-1)m
    (side='left') or W_nm * H = a_m W_nm + b_{m+1} W_n(m+1) + b_m W_n(m-1)
    (side='right'). Terms past the end of the chain are dropped."""
    a, b, D, F = pset.basis.a, pset.basis.b, pset.dim, pset.fields
    Wnm = pset.field(n, m)
    if side == "left":
        lhs = star(H_field, Wnm).values
        rhs = a[n] * F[n, m]
        if n + 1 < D:
            rhs = rhs + b[n + 1] * F[n + 1, m]
        if n > 0:
            rhs = rhs + b[n] * F[n - 1, m]
    elif side == "right":
        lhs = star(Wnm, H_field).values
        rhs = a[m] * F[n, m]
        if m + 1 < D:
            rhs = rhs + b[m + 1] * F[n, m + 1]
        if m > 0:
            rhs = rhs + b[m] * F[n, m - 1]
    else:
        raise ValueError("side must be 'left' or 'right'")
    return float(np.max(np.abs(lhs - rhs)))


def lanczos_coeffs_from_phase(H_field: PhaseField, pset: KrylovPhaseSet):
    """a_n = int H W^K_nn and b_n = int H W^K_n(n-1), both over phase space."""
    D = pset.dim
    pg = pset.grid
    Hs = H_field.as_symbol().values
    a = np.array([np.real(pg.integrate(Hs * pset.fields[n, n])) for n in range(D)])
    b = np.zeros(D)
    for n in range(1, D):
        b[n] = np.real(pg.integrate(Hs * pset.fields[n, n - 1]))
    return a, b


def split_diagonal_coefficients(pset: KrylovPhaseSet, potential, mass: float = 1.0) -> np.ndarray:
    """a_n = int p^2/2m |psi~_n(p)|^2 dp + int V |psi_n(q)|^2 dq.

    The kinetic part is evaluated spectrally on the full momentum set.
    """
    g = pset.basis.grid
    kin = g.momenta ** 2 / (2 * mass)
    V = potential(g.q_points)
    out = []
    for v in pset.basis.vectors:
        c = np.fft.fft(v.onb(), norm="ortho")
        out.append(float(np.sum(kin * np.abs(c) ** 2) + np.sum(V * np.abs(v.onb()) ** 2)))
    return np.array(out)


def star_integral_oracle(fA, fB, points, extent: float = 8.0, n: int = 128) -> np.ndarray:
    """Brute-force quadrature of the integral kernel
    (A * B)(x) = (1/pi^2) int dx1 dx2 A(x + x1) B(x + x2) e^{2i <x1, x2>_s}
    for analytic symbols fA(q, p), fB(q, p), at the listed phase points.

    The x2 integral is done first as e^{-2i<x1,x>} int dz B(z) e^{2i<x1,z>},
    a separable sum on a uniform n x n mesh over [-extent, extent]^2.
    """
    u = np.linspace(-extent, extent, n, endpoint=False)
    h = u[1] - u[0]
    Zq, Zp = np.meshgrid(u, u, indexing="ij")
    Bz = fB(Zq, Zp)
    out = []
    for q, p in points:
        q1, p1 = Zq - q, Zp - p          # A evaluated on the mesh, x1 = mesh - x
        # G(x1) = sum_z B(z) e^{2i(q1 p_z - p1 q_z)} h^2
        Eq = np.exp(2j * np.outer(u - q, u))     # [q1 index, p_z]
        Ep = np.exp(-2j * np.outer(u, u - p))    # [q_z, p1 index]
        G = h * h * (Eq @ Bz.T @ Ep)             # [q1, p1]
        G = G * np.exp(-2j * (q1 * p - p1 * q))
        out.append(h * h * np.sum(fA(Zq, Zp) * G) / np.pi ** 2)
    return np.array(out)
