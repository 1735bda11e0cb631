"""Exact small-N boson dynamics on a periodic lattice and the 3D scattering length."""

from .dynamics import (
    ConvergenceRow,
    LatticeDensity,
    bbgky_residual,
    convergence_study,
    cutoff,
    interaction_terms,
    lattice_nls,
    marginal,
    power_fit,
    pure_density,
    regularize_initial,
    sob_constant,
    sob_ratios,
    sobolev_trace,
    tail_state,
)
from .fock import FockBasis, ManyBodyState, basis, fock_dim, product_state
from .hamiltonian import (
    EvolutionError,
    Lattice,
    ManyBodyHamiltonian,
    PotentialSpec,
    build_hamiltonian,
    evolve,
    evolve_many,
    smooth_bump,
)
from .scattering import ScatteringError, ScatteringResult, decay_study, radial_bump, scattering_length, square_barrier_length
