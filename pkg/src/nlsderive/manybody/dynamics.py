"""Reduced densities, hierarchy residuals, spectral cutoff and the mean-field comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import eigh, expm

from .. import pde
from .fock import ManyBodyState, basis, product_state
from .hamiltonian import Lattice, ManyBodyHamiltonian, PotentialSpec, build_hamiltonian, evolve_many, pair_matrix


@dataclass
class LatticeDensity:
    """k-particle density on M sites as an M^k x M^k matrix, rows x_1..x_k (x_1 slowest)."""

    matrix: np.ndarray
    k: int
    M: int

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def data(self) -> np.ndarray:
        return self.matrix.reshape((self.M,) * (2 * self.k))

    def partial_trace(self) -> "LatticeDensity":
        """Trace out the last particle."""
        if self.k < 2:
            raise ValueError("nothing left to trace")
        m = self.M ** (self.k - 1)
        g = self.matrix.reshape(m, self.M, m, self.M)
        return LatticeDensity(np.einsum("azbz->ab", g), self.k - 1, self.M)

    def trace_norm(self) -> float:
        return float(np.abs(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))).sum())


def _annihilated(psi: ManyBodyState, k: int) -> np.ndarray:
    """Rows a_{x_k} ... a_{x_1} psi for all (x_1, ..., x_k), x_1 slowest."""
    M = psi.M
    Phi = psi.amps[None, :]
    for level in range(k):
        upper, lower = basis(psi.N - level, M), basis(psi.N - level - 1, M)
        parts = [(upper.annihilator(x, lower) @ Phi.T).T for x in range(M)]
        Phi = np.stack(parts, axis=1).reshape(-1, lower.dim)
    return Phi


def marginal(psi: ManyBodyState, k: int) -> LatticeDensity:
    """gamma^(k)(x; x') = <a^dag_x' a_x> (N - k)!/N!, unit trace for unit psi."""
    if not 1 <= k <= psi.N:
        raise ValueError("need 1 <= k <= N")
    Phi = _annihilated(psi, k)
    G = Phi @ Phi.conj().T
    G /= math.perm(psi.N, k)
    return LatticeDensity(G, k, psi.M)


def pure_density(phi, k: int = 1) -> LatticeDensity:
    """|phi><phi| tensored k times, phi given on the sites."""
    phi = np.asarray(phi, dtype=complex)
    v = reduce(np.kron, [phi] * k)
    return LatticeDensity(np.outer(v, v.conj()), k, phi.size)


# ---- BBGKY hierarchy


def _one_body_power(u: np.ndarray, k: int) -> np.ndarray:
    return reduce(np.kron, [u] * k)


def _multiplication(W: np.ndarray, k: int, i: int, j: int) -> np.ndarray:
    """Diagonal of W(x_i - x_j) over the M^k configurations."""
    M = W.size
    idx = np.indices((M,) * k).reshape(k, -1)
    return W[(idx[i] - idx[j]) % M]


def interaction_terms(g_k: LatticeDensity, g_k1: LatticeDensity, W: np.ndarray, N: int, factor: float | None = None):
    """(1/N) sum_{i<j} [W_ij, g_k] + factor * sum_j Tr_{k+1} [W_{j,k+1}, g_{k+1}], factor defaults to 1 - k/N."""
    k, M = g_k.k, g_k.M
    if factor is None:
        factor = 1.0 - k / N
    G = g_k.matrix
    out = np.zeros_like(G)
    for i in range(k):
        for j in range(i + 1, k):
            w = _multiplication(W, k, i, j)
            out += (w[:, None] - w[None, :]) * G / N
    m = M**k
    diag = np.einsum("azbz->abz", g_k1.matrix.reshape(m, M, m, M))
    idx = np.indices((M,) * k).reshape(k, -1)
    Wm = pair_matrix(W)
    for j in range(k):
        wz = Wm[idx[j]]  # W(x_j - z), shape (m, M)
        out += factor * (np.einsum("az,abz->ab", wz, diag) - np.einsum("bz,abz->ab", wz, diag))
    return out


def fd_derivative(f: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order central difference along axis 0 at the interior points 2..n-3."""
    return (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * dt)


def bbgky_residual(states: list[ManyBodyState], times, H: ManyBodyHamiltonian, k: int, factor: float | None = None) -> float:
    """Max Hilbert-Schmidt norm of i d_t g_k minus the hierarchy right-hand side.

    The kinetic commutator is removed exactly by differentiating the
    interaction-picture density U^dag g_k U, U = exp(-itT) on each particle,
    so only the interaction terms carry difference error.
    """
    N = H.N
    if not 1 <= k < N:
        raise ValueError("need 1 <= k < N")
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if len(times) < 5 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("need at least five equally spaced times")
    dt = float(steps[0])
    lam, V = np.linalg.eigh(H.lattice.kinetic())
    Us = [_one_body_power((V * np.exp(-1j * lam * t)) @ V.conj().T, k) for t in times]
    g = [marginal(s, k).matrix for s in states]
    tilde = np.array([U.conj().T @ G @ U for U, G in zip(Us, g)])
    dtilde = fd_derivative(tilde, dt)
    worst = 0.0
    for n in range(2, len(times) - 2):
        lhs = 1j * Us[n] @ dtilde[n - 2] @ Us[n].conj().T
        rhs = interaction_terms(LatticeDensity(g[n], k, H.lattice.M), marginal(states[n], k + 1), H.W, N, factor)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


# ---- initial-data cutoff


def cutoff(s):
    """Smooth step: 1 on s <= 1, 0 on s >= 2, built from exp(-1/u)."""
    s = np.asarray(s, dtype=float)

    def f(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    a, b = f(2.0 - s), f(s - 1.0)
    return a / (a + b)


def regularize_initial(psi: ManyBodyState, kappa: float, H: ManyBodyHamiltonian) -> tuple[ManyBodyState, float]:
    """chi(kappa H / N) psi normalized, and its distance to psi."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    lam, U = H.eig
    c = U.conj().T @ psi.amps
    filt = U @ (cutoff(kappa * lam / H.N) * c)
    nrm = np.linalg.norm(filt)
    if nrm < 1e-12 * max(psi.norm(), 1e-300):
        raise ValueError("cutoff removes the whole state")
    out = ManyBodyState(filt / nrm, psi.N, psi.M)
    return out, float(np.linalg.norm(out.amps - psi.amps))


def power_fit(x, y) -> tuple[float, float]:
    """Least squares y = C x^p in log-log; returns (p, C)."""
    p, logc = np.polyfit(np.log(x), np.log(y), 1)
    return float(p), float(np.exp(logc))


def tail_state(lat: Lattice, decay: float = 1.55) -> np.ndarray:
    """Unit phi with |phi_hat(q)| ~ <q>^{-decay}; decay > 3/2 keeps it in H^1 but barely."""
    q = np.fft.fftfreq(lat.M, lat.h) * 2 * np.pi
    phi = np.fft.ifft((1 + q * q) ** (-decay / 2))
    return phi / np.linalg.norm(phi)


# ---- Sobolev diagnostics


def sobolev_trace(g: LatticeDensity, lat: Lattice) -> float:
    """Tr |S_1..S_k g S_k..S_1| with S = (1 - Lap)^{1/2} on each particle."""
    lam, V = np.linalg.eigh(lat.kinetic())
    S = _one_body_power((V * np.sqrt(1 + lam)) @ V.conj().T, g.k)
    A = S @ g.matrix @ S
    return float(np.linalg.svd(A, compute_uv=False).sum())


def sob_constant(W: np.ndarray, lat: Lattice) -> float:
    """Sharp lattice constant of W(x_1 - x_2) <= c (1 - Lap_1)(1 - Lap_2)."""
    one = np.eye(lat.M) + lat.kinetic()
    B = np.kron(one, one)
    A = np.diag(_multiplication(W, 2, 0, 1))
    return float(eigh(A, B, eigvals_only=True)[-1])


def sob_ratios(W: np.ndarray, lat: Lattice, n: int, seed: int = 0) -> np.ndarray:
    """<psi, W psi> / <psi, (1 - Lap_1)(1 - Lap_2) psi> for n random two-particle states."""
    rng = np.random.default_rng(seed)
    one = np.eye(lat.M) + lat.kinetic()
    w = _multiplication(W, 2, 0, 1).reshape(lat.M, lat.M)
    psi = rng.normal(size=(n, lat.M, lat.M)) + 1j * rng.normal(size=(n, lat.M, lat.M))
    psi = psi + psi.transpose(0, 2, 1)
    num = np.einsum("nab,ab->n", np.abs(psi) ** 2, w)
    den = np.einsum("nab,nab->n", psi.conj(), one @ psi @ one.T).real
    return num / den


# ---- comparison with the lattice NLS


def lattice_nls(phi0, lat: Lattice, b0: float, times) -> list[np.ndarray]:
    """Site values of i d_t phi = T phi + (b0/h)|phi|^2 phi, sum |phi|^2 = 1, at the given times."""
    u0 = pde.Field(np.asarray(phi0, dtype=complex) / math.sqrt(lat.h), lat.L)
    out = []
    for t in times:
        if t == 0:
            out.append(np.asarray(phi0, dtype=complex))
            continue
        cfg = pde.SolverConfig(T=t, dt=t / 4096, b0=b0, kinetic="lattice", save_every=4096)
        out.append(pde.solve_nls(u0, cfg).values[-1] * math.sqrt(lat.h))
    return out


def default_phi(lat: Lattice) -> np.ndarray:
    x = lat.x * 2 * np.pi / lat.L
    phi = 1 + 0.6 * np.exp(1j * x) + 0.3j * np.exp(-2j * x)
    return phi / np.linalg.norm(phi)


@dataclass
class ConvergenceRow:
    N: int
    t: float
    distance: float
    dim: int


def convergence_study(
    N_list, beta: float = 0.4, phi0=None, t: float = 0.5, M: int = 12, b0: float = 1.0, L: float = 2 * np.pi
) -> list[ConvergenceRow]:
    """Trace distance between the one-particle marginal and |phi_t><phi_t| for each N."""
    lat = Lattice(M, L / M)
    phi0 = default_phi(lat) if phi0 is None else np.asarray(phi0, dtype=complex)
    if phi0.shape != (M,) or abs(np.linalg.norm(phi0) - 1) > 1e-12:
        raise ValueError("phi0 must be a unit vector on the M sites")
    phi_t = lattice_nls(phi0, lat, b0, [t])[0]
    ref = pure_density(phi_t)
    rows = []
    for N in N_list:
        spec = PotentialSpec.with_coupling(b0, beta, N)
        H = build_hamiltonian(spec, lat)
        psi_t = evolve_many(product_state(phi0, N), H, [t])[0]
        g = marginal(psi_t, 1)
        d = LatticeDensity(g.matrix - ref.matrix, 1, M).trace_norm()
        rows.append(ConvergenceRow(N, t, d, H.dim))
    return rows


def free_propagator(lat: Lattice, t: float) -> np.ndarray:
    return expm(-1j * t * lat.kinetic())
