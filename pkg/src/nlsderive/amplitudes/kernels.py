"""Amplitude kernels K_{Gamma,t} and L_{Gamma,t} on a momentum lattice.

Leaves of a graph are attached to the slots of the initial kernel through the
leaf pairing: the i-th pair (outward leaf, inward leaf) reads slot i on the
unprimed and primed side.  Root pairs come first, so the roots of (T_j, T'_j)
are the output slots j.  Momenta flow bottom-up by Kirchhoff's rule
(father = marked + same - opp) and every edge momentum must stay inside the
window, exactly as the intermediate kernels of the Duhamel expansion do.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..graphs import FeynmanGraph
from . import poles
from .lattice import DensityKernel, MomentumLattice


@dataclass(frozen=True)
class QuadratureSpec:
    """How root alpha integrals are done.

    ``residue`` closes every contour exactly.  ``quadrature`` keeps the
    internal vertex integrals exact and integrates the root alpha numerically
    with the regulator ``eta`` of the root edge kept finite, so the result
    depends on eta only through quadrature error.
    """

    eta: float = 1.0
    method: str = "residue"
    epsabs: float = 1e-11
    limit: int = 400

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.method not in ("residue", "quadrature"):
            raise ValueError(f"unknown method {self.method!r}")


def quad_root_transform(f: poles.PoleDict, tau: int, t: float, eta: float, unit: float, spec: QuadratureSpec) -> complex:
    """Numerical int dalpha/(2 pi) exp(-i tau t alpha) exp(t eta) f(alpha)."""

    def g(a):
        return poles.evaluate(f, a, tau, eta, unit)

    def even(a):
        return g(a) + g(-a)

    def odd(a):
        return g(a) - g(-a)

    emax = max(abs(e) for e, _ in f) * unit
    cut = 2 * emax + 40 * (eta + 1)
    kw = dict(epsabs=spec.epsabs, epsrel=1e-12, limit=spec.limit)

    def part(fun, weight):
        re = lambda a: fun(a).real  # noqa: E731
        im = lambda a: fun(a).imag  # noqa: E731
        out = 0j
        for comp, scale in ((re, 1), (im, 1j)):
            if t == 0:
                if weight == "sin":
                    continue
                val = integrate.quad(comp, 0, cut, **kw)[0] + integrate.quad(comp, cut, np.inf, **kw)[0]
            else:
                val = integrate.quad(comp, 0, cut, weight=weight, wvar=t, **kw)[0]
                val += integrate.quad(comp, cut, np.inf, weight=weight, wvar=t, limlst=100, epsabs=spec.epsabs)[0]
            out += scale * val
        return out

    total = part(even, "cos") - 1j * tau * part(odd, "sin")
    return total * np.exp(t * eta) / (2 * np.pi)


class _TreeEvaluator:
    """Evaluates one component for every assignment of its leaf momenta."""

    def __init__(self, graph: FeynmanGraph, comp: int, lattice: MomentumLattice, vbar=None):
        self.g = graph
        self.comp = comp
        self.lat = lattice
        self.vbar = vbar
        self.unit = lattice.dp**2
        self.cache: dict = {}
        self.tree = graph.trees[comp]
        self.tau = 1 if comp % 2 == 0 else -1

    def _eval(self, node, orient, moms):
        """(momentum, pole dict or None) for a subtree; None when out of window."""
        if node is None:
            m = moms[0]
            return m, poles.leaf(m * m)
        key = (node[0], moms)
        if key in self.cache:
            return self.cache[key]
        sizes = [2 * _qsize(s) + 1 for s in node[1:]]
        a, b = sizes[0], sizes[0] + sizes[1]
        r1 = self._eval(node[1], orient, moms[:a])
        r2 = self._eval(node[2], orient, moms[a:b])
        r3 = self._eval(node[3], -orient, moms[b:])
        res = None
        if r1 is not None and r2 is not None and r3 is not None:
            m = r1[0] + r2[0] - r3[0]
            if self.lat.contains(m):
                if node[0] == self.vbar:
                    res = (m, poles.leaf(m * m))
                else:
                    f = poles.convolve(r1[1], r2[1], r3[1], orient)
                    res = (m, poles.times_propagator(f, m * m, self.unit))
        self.cache[key] = res
        return res

    def leaf_count(self) -> int:
        return 2 * _qsize(self.tree) + 1

    def table(self, t: float, eta_root: float, spec: QuadratureSpec) -> np.ndarray:
        """W[root, leaf_1, ..., leaf_l] = root transform, zero when masked."""
        M = self.lat.modes
        nl = self.leaf_count()
        W = np.zeros((M,) * (nl + 1), dtype=complex)
        seen: dict = {}
        for idx in itertools.product(range(M), repeat=nl):
            moms = tuple(i - self.lat.half for i in idx)
            r = self._eval(self.tree, self.tau, moms)
            if r is None:
                continue
            m, f = r
            if spec.method == "residue":
                val = poles.root_transform(f, self.tau, t, self.unit)
            else:
                key = tuple(sorted((e, k, round(c.real, 13), round(c.imag, 13)) for (e, k), c in f.items()))
                if key not in seen:
                    seen[key] = quad_root_transform(f, self.tau, t, eta_root, self.unit, spec)
                val = seen[key]
            W[(self.lat.index(m),) + idx] = val
        return W


def _qsize(t) -> int:
    if t is None:
        return 0
    return 1 + _qsize(t[1]) + _qsize(t[2]) + _qsize(t[3])


def _component_leaves(g: FeynmanGraph, comp: int) -> list[int]:
    return [e.id for e in g.edges if e.comp == comp and e.child is None]


def slot_labels(g: FeynmanGraph) -> dict:
    """Leaf edge -> axis of the initial kernel."""
    npairs = g.n + g.k
    out = {}
    for i, (a, b) in enumerate(g.leaf_pairing()):
        out[a] = i
        out[b] = npairs + i
    return out


def _assemble(g, t, gamma0, eta, spec, vbar=None) -> np.ndarray:
    lat = gamma0.lattice
    if gamma0.order != g.n + g.k:
        raise ValueError(f"initial kernel must have order {g.n + g.k}, got {gamma0.order}")
    slots = slot_labels(g)
    if eta is None:
        eta = {leaf: spec.eta for leaf in g.leaves}
    eta_all = g.assign_eta(eta)
    npairs = g.n + g.k
    ops: list = [gamma0.data, list(range(2 * npairs))]
    out_labels = [0] * (2 * g.k)
    for c in range(2 * g.k):
        ev = _TreeEvaluator(g, c, lat, vbar)
        root = g.roots[c]
        W = ev.table(t, eta_all[root], spec)
        root_label = 2 * npairs + c
        ops += [W, [root_label] + [slots[leaf] for leaf in _component_leaves(g, c)]]
        j = c // 2
        out_labels[j + (g.k if c % 2 else 0)] = root_label
    ops.append(out_labels)
    return np.einsum(*ops, optimize=True)


def evaluate_K(
    g: FeynmanGraph,
    t: float,
    gamma0: DensityKernel,
    b0: float = 1.0,
    eta: dict | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
) -> DensityKernel:
    """Kernel of the amplitude of g applied to gamma0 (order n+k -> order k)."""
    data = _assemble(g, t, gamma0, eta, spec)
    weight = (b0 / gamma0.lattice.length) ** g.n
    return DensityKernel(data * weight, gamma0.lattice)


def evaluate_L(
    g: FeynmanGraph,
    t: float,
    gamma: DensityKernel,
    b0: float = 1.0,
    eta: dict | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
) -> DensityKernel:
    """Remainder amplitude: signed sum over maximal vertices vbar.

    At vbar the son edges carry neither propagator nor alpha and the father
    edge keeps only its own propagator.
    """
    if g.n == 0:
        raise ValueError("the remainder amplitude needs at least one vertex")
    weight = (b0 / gamma.lattice.length) ** g.n
    total = np.zeros((gamma.lattice.modes,) * (2 * g.k), dtype=complex)
    for v in g.maximal_vertices:
        total += g.vertices[v].sigma * _assemble(g, t, gamma, eta, spec, vbar=v)
    return DensityKernel(total * weight, gamma.lattice)
