"""Collision operator, Duhamel terms and graph amplitudes on a momentum lattice."""

from .duhamel import FullexpReport, QuadratureError, duhamel_term, graph_sum, remainder_sides, verify_fullexp
from .kernels import QuadratureSpec, evaluate_K, evaluate_L, slot_labels
from .lattice import (
    DensityKernel,
    MomentumLattice,
    apply_B,
    free_evolution,
    product_kernel,
    random_symmetric_kernel,
)

__all__ = [
    "DensityKernel",
    "FullexpReport",
    "MomentumLattice",
    "QuadratureError",
    "QuadratureSpec",
    "apply_B",
    "duhamel_term",
    "evaluate_K",
    "evaluate_L",
    "free_evolution",
    "graph_sum",
    "product_kernel",
    "random_symmetric_kernel",
    "remainder_sides",
    "slot_labels",
    "verify_fullexp",
]
