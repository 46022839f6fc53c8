"""Wigner-Weyl phase-space numerics for Krylov state and operator complexity on a 1D grid."""
from .gridcore import BoundaryError, Grid1D, GridError, PhaseGrid, make_grid, phase_grid
from .quantum import (OperatorMatrix, PolynomialPotential, SpectralDecomposition, StateVector,
                      build_hamiltonian, coherent_state, eigendecompose, evolve_operator,
                      evolve_state, gaussian_state, harmonic_potential, quartic_potential)
from .wigner import PhaseField, krylov_phase_set, spreading_kernel, weyl_transform, wigner_of_state
from .krylov import amplitudes, chain_evolve, lanczos_operator, lanczos_state
from .complexity import complexity_direct, complexity_phase
from .superphase import DoublePhaseField, dwf_pair, operator_krylov_phase_set

__version__ = "0.1.0"
