"""Duhamel terms by nested time quadrature, and the graph-expansion checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import graphs
from .kernels import QuadratureSpec, evaluate_K, evaluate_L
from .lattice import DensityKernel, apply_B, free_evolution


class QuadratureError(RuntimeError):
    pass


def _nested(n: int, t: float, gamma0, b_op, free, nodes: int):
    """int_0^t U(t-s) B D_{n-1}(s) ds with D_0(s) = U(s) gamma0."""
    if n == 0:
        return free(gamma0, t)
    if t == 0:
        return _zero_result(n, gamma0, b_op)
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * t * (x + 1)
    w = 0.5 * t * w
    total = None
    for si, wi in zip(s, w):
        inner = _nested(n - 1, si, gamma0, b_op, free, nodes)
        term = free(b_op(inner), t - si) * wi
        total = term if total is None else total + term
    return total


def _zero_result(n, gamma0, b_op):
    out = gamma0
    for _ in range(n):
        out = b_op(out)
    return out * 0.0


def duhamel_term(
    n: int,
    t: float,
    gamma0: DensityKernel,
    b0: float = 1.0,
    tol: float = 1e-11,
    start_nodes: int = 8,
    max_nodes: int = 64,
    b_op: Callable | None = None,
    free: Callable | None = None,
):
    """n-th Duhamel term applied to gamma0 (order k+n -> order k).

    Gauss-Legendre rules on the nested simplex, doubling the node count until
    two successive results agree to ``tol``.  ``b_op`` and ``free`` replace the
    collision operator and free evolution (test hooks).
    Returns (kernel, achieved difference).
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if b_op is None:
        b_op = lambda g: apply_B(g, b0)  # noqa: E731
    if free is None:
        free = free_evolution
    if n == 0:
        return free(gamma0, t), 0.0
    nodes = start_nodes
    prev = _nested(n, t, gamma0, b_op, free, nodes)
    while True:
        nodes *= 2
        cur = _nested(n, t, gamma0, b_op, free, nodes)
        err = float(np.max(np.abs(_data(cur) - _data(prev))))
        if err < tol:
            return cur, err
        if nodes >= max_nodes:
            raise QuadratureError(f"time quadrature not converged: difference {err:.3e} with {nodes} nodes")
        prev = cur


def _data(x):
    return x.data if isinstance(x, DensityKernel) else np.asarray(x)


@dataclass
class FullexpReport:
    n: int
    k: int
    t: float
    max_abs_diff: float
    max_abs_lhs: float
    graphs: int
    quadrature_error: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def graph_sum(n: int, k: int, t: float, gamma0: DensityKernel, b0: float = 1.0, spec=QuadratureSpec(), eta=None):
    total = None
    for g in graphs.enumerate_feynman(n, k):
        term = evaluate_K(g, t, gamma0, b0, eta=None if eta is None else eta(g), spec=spec)
        total = term if total is None else total + term
    return total


def verify_fullexp(n: int, k: int, t: float, gamma0: DensityKernel, b0: float = 1.0, spec=QuadratureSpec()):
    """Compare the n-th Duhamel term with the sum of graph amplitudes over F_{n,k}."""
    lhs, qerr = duhamel_term(n, t, gamma0, b0)
    rhs = graph_sum(n, k, t, gamma0, b0, spec)
    diff = float(np.max(np.abs(lhs.data - rhs.data)))
    return FullexpReport(n, k, t, diff, float(np.max(np.abs(lhs.data))), len(graphs.enumerate_feynman(n, k)), qerr), lhs, rhs


def remainder_sides(t: float, gamma: DensityKernel, b0: float = 1.0, nodes: int = 24, spec=QuadratureSpec()):
    """Both sides of int_0^t U(t-s) B gamma ds = -i sum_Gamma int_0^t L_{Gamma,t-s} gamma ds.

    gamma is held constant in time; n=1 and k = order(gamma) - 1.
    """
    k = gamma.order - 1
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * t * (x + 1)
    w = 0.5 * t * w
    bg = apply_B(gamma, b0)
    lhs = sum((free_evolution(bg, t - si) * wi for si, wi in zip(s, w)), start=bg * 0.0)
    rhs = None
    for g in graphs.enumerate_feynman(1, k):
        for si, wi in zip(s, w):
            term = evaluate_L(g, t - si, gamma, b0, spec=spec) * (-1j * wi)
            rhs = term if rhs is None else rhs + term
    return lhs, rhs
