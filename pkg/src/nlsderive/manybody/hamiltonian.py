"""Lattice Hamiltonian with scaled pair interaction and exact time evolution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.sparse.linalg import expm_multiply

from .fock import FockBasis, ManyBodyState, basis

DENSE_DIM = 4000  # eigendecomposition below this size, Taylor/Krylov-type action above


class EvolutionError(RuntimeError):
    """The sparse exponential lost unitarity."""


def smooth_bump(x, R: float = 1.0):
    """exp(1 - 1/(1 - (x/R)^2)) on |x| < R, zero outside; smooth, even, peak 1."""
    x = np.asarray(x, dtype=float)
    u = (x / R) ** 2
    out = np.zeros_like(x)
    inside = u < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside]))
    return out


@dataclass(frozen=True)
class Lattice:
    """M periodic sites with spacing h."""

    M: int
    h: float = 1.0

    def __post_init__(self):
        if self.M < 2 or not self.h > 0:
            raise ValueError("need M >= 2 sites and h > 0")

    @property
    def L(self) -> float:
        return self.M * self.h

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.M) * self.h

    def kinetic(self) -> np.ndarray:
        """Minus the nearest-neighbour Laplacian as a dense M x M matrix."""
        T = np.zeros((self.M, self.M))
        i = np.arange(self.M)
        T[i, i] = 2.0
        np.add.at(T, (i, (i + 1) % self.M), -1.0)
        np.add.at(T, (i, (i - 1) % self.M), -1.0)
        return T / self.h**2

    def band(self) -> np.ndarray:
        """Eigenvalues of ``kinetic`` in FFT order: (4/h^2) sin^2(pi q / M)."""
        q = np.fft.fftfreq(self.M, 1.0 / self.M)
        return 4.0 / self.h**2 * np.sin(np.pi * q / self.M) ** 2

    def displacement(self) -> np.ndarray:
        """Nearest-image displacement of site d from the origin."""
        d = np.arange(self.M)
        return np.where(d <= self.M // 2, d, d - self.M) * self.h


@dataclass(frozen=True)
class PotentialSpec:
    """Unscaled even potential V >= 0 with support [-R, R]; V_N(x) = N^beta V(N^beta x)."""

    V: Callable = smooth_bump
    beta: float = 0.4
    N: int = 2
    R: float = 1.0

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        if self.N < 1 or not self.R > 0:
            raise ValueError("need N >= 1 and R > 0")
        xs = np.linspace(-self.R, self.R, 257)
        if np.min(self.V(xs)) < 0:
            raise ValueError("V must be nonnegative")

    @classmethod
    def with_coupling(cls, b0: float, beta: float = 0.4, N: int = 2, R: float = 1.0) -> "PotentialSpec":
        """Scaled smooth bump with integral b0 (b0 = 0 gives V = 0)."""
        if b0 < 0:
            raise ValueError("b0 must be nonnegative")
        unit = integrate.quad(lambda x: float(smooth_bump(x, R)), -R, R, epsabs=1e-14, epsrel=1e-13)[0]
        c = b0 / unit

        def V(x, c=c, R=R):
            return c * smooth_bump(x, R)

        return cls(V, beta, N, R)

    @cached_property
    def b0(self) -> float:
        return integrate.quad(lambda x: float(self.V(x)), -self.R, self.R, epsabs=1e-14, epsrel=1e-13)[0]

    @property
    def scale(self) -> float:
        return self.N**self.beta

    def V_N(self, x):
        s = self.scale
        return s * self.V(s * np.asarray(x, dtype=float))

    def lattice_values(self, lat: Lattice) -> np.ndarray:
        """Cell averages W(d) = (1/h) int over cell d of V_N, all periodic images included.

        sum_d W(d) h equals b0 exactly, so W tends to (b0/h) delta_{d,0} as N grows.
        """
        Rn = self.R / self.scale
        W = np.zeros(lat.M)
        for d, xd in enumerate(lat.displacement()):
            lo0, hi0 = xd - lat.h / 2, xd + lat.h / 2
            n_img = int(math.ceil(Rn / lat.L)) + 1
            for m in range(-n_img, n_img + 1):
                lo, hi = max(lo0 + m * lat.L, -Rn), min(hi0 + m * lat.L, Rn)
                if hi > lo:
                    W[d] += integrate.quad(lambda y: float(self.V_N(y)), lo, hi, epsabs=1e-15, epsrel=1e-13)[0]
        return W / lat.h


@dataclass
class ManyBodyHamiltonian:
    """H = sum_j T_j + (1/N) sum_{i<j} W(x_i - x_j) on the occupation basis."""

    matrix: sp.csr_matrix
    N: int
    lattice: Lattice
    W: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def basis(self) -> FockBasis:
        return basis(self.N, self.lattice.M)

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix.toarray())

    def energy(self, psi: ManyBodyState) -> float:
        return float(np.vdot(psi.amps, self.matrix @ psi.amps).real)

    def moment(self, psi: ManyBodyState, k: int) -> float:
        v = psi.amps
        for _ in range(k):
            v = self.matrix @ v
        return float(np.vdot(psi.amps, v).real)


def pair_matrix(W: np.ndarray) -> np.ndarray:
    """W(x - y) as an M x M matrix."""
    M = W.size
    i = np.arange(M)
    return W[(i[:, None] - i[None, :]) % M]


def build_hamiltonian(spec: PotentialSpec, lat: Lattice) -> ManyBodyHamiltonian:
    B = basis(spec.N, lat.M)
    T = lat.kinetic()
    W = spec.lattice_values(lat)
    Wm = pair_matrix(W)
    occ = B.occ.astype(float)
    diag = occ @ np.diag(T)
    pair = 0.5 * (np.einsum("sx,xy,sy->s", occ, Wm, occ) - W[0] * occ.sum(axis=1))
    diag = diag + pair / spec.N
    rows, cols, vals = [np.arange(B.dim)], [np.arange(B.dim)], [diag]
    for y, x in zip(*np.nonzero(T - np.diag(np.diag(T)))):
        r, c, a = B.hop(int(x), int(y))  # a^dagger_y a_x carries T[y, x]
        rows.append(r)
        cols.append(c)
        vals.append(T[y, x] * a)
    H = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(B.dim, B.dim)
    )
    H.sum_duplicates()
    return ManyBodyHamiltonian(H, spec.N, lat, W)


def evolve(psi: ManyBodyState, H: ManyBodyHamiltonian, t: float) -> ManyBodyState:
    return evolve_many(psi, H, [t])[0]


def evolve_many(psi: ManyBodyState, H: ManyBodyHamiltonian, times) -> list[ManyBodyState]:
    """exp(-iHt) psi for each t; eigendecomposition for small dimensions."""
    times = np.asarray(times, dtype=float)
    if H.dim <= DENSE_DIM:
        lam, U = H.eig
        c = U.conj().T @ psi.amps
        out = U @ (np.exp(-1j * np.outer(lam, times)) * c[:, None])
        cols = out.T
    else:
        A = -1j * H.matrix.tocsc()
        cols = []
        for i, t in enumerate(times):
            prev = cols[-1] if i and times[i] >= times[i - 1] else psi.amps
            dt = t - times[i - 1] if i and times[i] >= times[i - 1] else t
            cols.append(expm_multiply(A * dt, prev) if dt != 0 else prev.copy())
        cols = np.array(cols)
        drift = np.abs(np.linalg.norm(cols, axis=1) - psi.norm()).max()
        if drift > 1e-10:
            raise EvolutionError(f"norm drift {drift:.2e} in sparse exponential")
    return [ManyBodyState(c, psi.N, psi.M) for c in cols]
