"""Bosonic occupation-number basis on M lattice sites.

States are ranked in colexicographic order of the strictly increasing
sequence c_j = i_j + j - 1 built from the sorted particle positions
i_1 <= ... <= i_N, so rank = sum_j binom(c_j, j).  The sum splits per site,
which gives a table lookup ``table[x, P, n]`` (P = particles left of x).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

from .. import backend, caps


def fock_dim(N: int, M: int) -> int:
    return comb(N + M - 1, N)


@lru_cache(maxsize=16)
def rank_table(M: int, N: int) -> np.ndarray:
    """table[x, P, n] = sum_{m=1..n} binom(x + P + m - 1, P + m), zero where P + n > N."""
    t = np.zeros((M, N + 1, N + 1), dtype=np.int64)
    for x in range(M):
        for P in range(N + 1):
            acc = 0
            for n in range(1, N + 1 - P):
                acc += comb(x + P + n - 1, P + n)
                t[x, P, n] = acc
    return t


class FockBasis:
    """All occupations (n_0, ..., n_{M-1}) with sum N, row i having rank i."""

    def __init__(self, N: int, M: int):
        if N < 0 or M < 1:
            raise ValueError("need N >= 0 and M >= 1")
        caps.check("fock_dim", fock_dim(N, M))
        self.N, self.M = N, M
        self.dim = fock_dim(N, M)
        pos = np.array(list(itertools.combinations_with_replacement(range(M), N)), dtype=np.int64).reshape(fock_dim(N, M), N)
        occ = np.zeros((self.dim, M), dtype=np.int64)
        np.add.at(occ, (np.repeat(np.arange(self.dim), N), pos.ravel()), 1)
        self.table = rank_table(M, max(N, 1))
        r = self.rank(occ)
        self.occ = np.empty_like(occ)
        self.occ[r] = occ
        self.occ.setflags(write=False)

    def rank(self, occ: np.ndarray) -> np.ndarray:
        occ = np.atleast_2d(occ)
        prefix = np.cumsum(occ, axis=1) - occ
        return self.table[np.arange(self.M), prefix, occ].sum(axis=1)

    def index(self, occupation) -> int:
        occupation = np.asarray(occupation, dtype=np.int64)
        if occupation.shape != (self.M,) or occupation.min() < 0 or occupation.sum() != self.N:
            raise ValueError("not an occupation of this basis")
        return int(self.rank(occupation)[0])

    def hop(self, src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, amplitudes) of a^dagger_dst a_src, dst != src, inside this basis."""
        tgt = backend.hop_targets(self.occ, self.table, src, dst)
        cols = np.flatnonzero(tgt >= 0)
        amp = np.sqrt(self.occ[cols, src] * (self.occ[cols, dst] + 1.0))
        return tgt[cols], cols, amp

    def annihilator(self, x: int, lower: "FockBasis") -> sp.csr_matrix:
        """a_x as a sparse map from this basis to ``lower`` (N - 1 particles)."""
        if lower.N != self.N - 1 or lower.M != self.M:
            raise ValueError("lower basis must have N - 1 particles on the same sites")
        tgt = backend.hop_targets(self.occ, lower.table, x, -1)
        cols = np.flatnonzero(tgt >= 0)
        amp = np.sqrt(self.occ[cols, x].astype(float))
        return sp.csr_matrix((amp, (tgt[cols], cols)), shape=(lower.dim, self.dim))

    def number(self, x: int) -> np.ndarray:
        return self.occ[:, x]


@lru_cache(maxsize=8)
def basis(N: int, M: int) -> FockBasis:
    return FockBasis(N, M)


@dataclass
class ManyBodyState:
    """Amplitudes over ``basis(N, M)``; permutation symmetric by construction."""

    amps: np.ndarray
    N: int
    M: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (fock_dim(self.N, self.M),):
            raise ValueError("amplitude vector does not match the basis dimension")

    @property
    def basis(self) -> FockBasis:
        return basis(self.N, self.M)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "ManyBodyState":
        return ManyBodyState(self.amps / self.norm(), self.N, self.M, dict(self.meta))

    def inner(self, other: "ManyBodyState") -> complex:
        return complex(np.vdot(self.amps, other.amps))


def product_state(phi, N: int) -> ManyBodyState:
    """phi^{(x)N} in the occupation basis: amplitude sqrt(N!/prod n_x!) prod phi_x^{n_x}."""
    phi = np.asarray(phi, dtype=complex)
    B = basis(N, phi.size)
    fact = np.array([factorial(n) for n in range(N + 1)], dtype=float)
    logw = 0.5 * (np.log(float(factorial(N))) - np.log(fact[B.occ]).sum(axis=1))
    amps = np.exp(logw) * np.prod(phi[None, :] ** B.occ, axis=1)
    return ManyBodyState(amps, N, phi.size)
