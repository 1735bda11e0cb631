"""Cubic NLS and Hartree equations on a periodic grid.

The equations are i d_t u = -Lap u + b0 |u|^2 u and
i d_t u = -Lap u + (V * |u|^2) u.  Both are integrated by Strang splitting:
half a nonlinear step, an exact kinetic step in Fourier space, another half
nonlinear step.  The nonlinear substeps are exact too, since they only
rotate the phase pointwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ENERGY_TAIL = 1e-10


class ConfigError(ValueError):
    """Solver configuration or initial data violates a precondition."""


@dataclass
class Field:
    """Complex samples on the periodic grid [0, L)^d with M points per axis."""

    values: np.ndarray
    L: float = 2 * math.pi

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        shape = self.values.shape
        if not shape or len(set(shape)) != 1:
            raise ConfigError(f"field must have M points along every axis, got shape {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field values must be finite")
        if self.L <= 0:
            raise ConfigError("box length must be positive")

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def cell(self) -> float:
        return self.h**self.d

    def grid(self) -> np.ndarray:
        return np.arange(self.M) * self.h

    def k2(self) -> np.ndarray:
        return wavenumbers_squared(self.M, self.L, self.d)

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.cell)

    def normalized(self) -> "Field":
        return Field(self.values / self.norm(), self.L)

    def tail_fraction(self) -> float:
        """Share of |u^|^2 carried by modes with some |k_i| >= M/4 (in units of 2 pi / L)."""
        power = np.abs(np.fft.fftn(self.values)) ** 2
        idx = np.abs(np.fft.fftfreq(self.M, 1.0 / self.M))
        outer = np.zeros(power.shape, dtype=bool)
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.M
            outer |= (idx >= self.M / 4).reshape(shape)
        total = power.sum()
        return float(power[outer].sum() / total) if total else 0.0


def wavenumbers_squared(M: int, L: float, d: int = 1) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(M, L / M)
    out = np.zeros((M,) * d)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = M
        out = out + (k**2).reshape(shape)
    return out


def lattice_symbol(M: int, L: float, d: int = 1) -> np.ndarray:
    """Fourier symbol of minus the nearest-neighbour Laplacian with spacing h = L/M."""
    h = L / M
    k = 2 * np.pi * np.fft.fftfreq(M, h)
    s = (4 / h**2) * np.sin(k * h / 2) ** 2
    out = np.zeros((M,) * d)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = M
        out = out + s.reshape(shape)
    return out


def kinetic_symbol(u: Field, kind: str = "spectral") -> np.ndarray:
    if kind == "spectral":
        return u.k2()
    if kind == "lattice":
        return lattice_symbol(u.M, u.L, u.d)
    raise ConfigError(f"unknown kinetic operator {kind!r}")


def laplacian(u: Field) -> np.ndarray:
    return np.fft.ifftn(-u.k2() * np.fft.fftn(u.values))


@dataclass(frozen=True)
class SolverConfig:
    """Time step, final time (negative runs backwards), coupling and splitting order."""

    T: float = 1.0
    dt: float | None = None
    b0: float = 1.0
    order: int = 2
    save_every: int = 1
    kinetic: str = "spectral"  # or "lattice" for the nearest-neighbour Laplacian

    def __post_init__(self):
        if self.kinetic not in ("spectral", "lattice"):
            raise ConfigError(f"unknown kinetic operator {self.kinetic!r}")
        if self.order != 2:
            raise ConfigError("only the second-order (Strang) splitting is implemented")
        if self.b0 < 0:
            raise ConfigError("focusing couplings b0 < 0 are out of scope")
        if self.step <= 0 or not math.isfinite(self.step):
            raise ConfigError("dt must be positive")
        if self.save_every < 1:
            raise ConfigError("save_every must be >= 1")

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else abs(self.T) / 2048 if self.T else 1.0

    @property
    def n_steps(self) -> int:
        return int(round(abs(self.T) / self.step))


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # (n_times, M, ..., M)
    L: float
    config: SolverConfig
    potential: np.ndarray | None = None  # sampled Hartree potential, None for the cubic NLS
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def field(self, i: int) -> Field:
        return Field(self.values[i], self.L)

    def masses(self) -> np.ndarray:
        cell = (self.L / self.values.shape[1]) ** (self.values.ndim - 1)
        return np.sum(np.abs(self.values) ** 2, axis=tuple(range(1, self.values.ndim))) * cell

    def energies(self) -> np.ndarray:
        return np.array([energy(self.field(i), self.config.b0, self.potential) for i in range(len(self))])

    def header(self) -> dict:
        cfg = self.config
        return {
            "L": self.L,
            "M": int(self.values.shape[1]),
            "d": int(self.values.ndim - 1),
            "T": cfg.T,
            "dt": cfg.step,
            "b0": cfg.b0,
            "order": cfg.order,
            "save_every": cfg.save_every,
            "kinetic": cfg.kinetic,
            "equation": "nls" if self.potential is None else "hartree",
            **self.meta,
        }

    def save(self, path) -> None:
        """Complex arrays plus a JSON header in one .npz archive."""
        arrays = dict(times=self.times, values=self.values, header=np.array(json.dumps(self.header(), sort_keys=True)))
        if self.potential is not None:
            arrays["potential"] = self.potential
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "Trajectory":
        with np.load(path) as z:
            head = json.loads(str(z["header"]))
            cfg = SolverConfig(
                T=head["T"], dt=head["dt"], b0=head["b0"], order=head["order"], save_every=head["save_every"], kinetic=head["kinetic"]
            )
            pot = z["potential"] if "potential" in z.files else None
            return cls(z["times"], z["values"], head["L"], cfg, pot)


# ---- energies and bounds


def _density_potential(u: Field, b0: float, V_hat: np.ndarray | None) -> np.ndarray:
    rho = np.abs(u.values) ** 2
    if V_hat is None:
        return b0 * rho
    return np.real(np.fft.ifftn(V_hat * np.fft.fftn(rho))) * u.cell


def kinetic_energy(u: Field) -> float:
    """int |grad u|^2, computed spectrally."""
    uh = np.fft.fftn(u.values)
    return float(np.sum(u.k2() * np.abs(uh) ** 2)) * u.cell / u.M**u.d


def energy(u: Field, b0: float, potential: np.ndarray | None = None) -> float:
    """int |grad u|^2 + (1/2) int (V * |u|^2)|u|^2, with V = b0 delta for the cubic NLS."""
    V_hat = None if potential is None else np.fft.fftn(potential)
    rho = np.abs(u.values) ** 2
    inter = 0.5 * float(np.sum(_density_potential(u, b0, V_hat) * rho)) * u.cell
    return kinetic_energy(u) + inter


def h1_norm(u: Field) -> float:
    """(u, (1 - Lap) u) = ||u||^2 + ||grad u||^2."""
    return u.norm() ** 2 + kinetic_energy(u)


def h1_bound(u0: Field, b0: float) -> float:
    """Time-uniform bound on (u_t, (1 - Lap) u_t): mass plus the conserved energy bounds the kinetic part."""
    if b0 < 0:
        raise ConfigError("the bound needs b0 >= 0")
    return u0.norm() ** 2 + energy(u0, b0)


# ---- solvers


def _check(u0: Field, cfg: SolverConfig, V_hat, normalized: bool) -> None:
    if normalized and abs(u0.norm() - 1.0) > 1e-12:
        raise ConfigError(f"initial data must have unit L2 norm, got {u0.norm():.15g}")
    tail = u0.tail_fraction()
    if tail > ENERGY_TAIL:
        raise ConfigError(f"grid does not resolve the initial data: spectral tail {tail:.2e}")
    # the kinetic phase matters on the populated band only; the step is exact there
    power = np.abs(np.fft.fftn(u0.values)) ** 2
    band = power > ENERGY_TAIL * power.sum()
    k2max = float(kinetic_symbol(u0, cfg.kinetic)[band].max()) if band.any() else 0.0
    nl = float(np.max(_density_potential(u0, cfg.b0, V_hat)))
    phase = cfg.step * max(k2max, nl)
    if phase >= math.pi:
        raise ConfigError(f"dt * max phase = {phase:.3g} >= pi; reduce dt")


def _strang(u0: Field, cfg: SolverConfig, V_hat: np.ndarray | None, potential, normalized: bool = True) -> Trajectory:
    _check(u0, cfg, V_hat, normalized)
    n = cfg.n_steps
    dt = math.copysign(cfg.step, cfg.T) if cfg.T else cfg.step
    prop = np.exp(-1j * kinetic_symbol(u0, cfg.kinetic) * dt)
    u = u0.values.copy()
    out_t = [0.0]
    out_u = [u.copy()]
    half = 0.5 * dt
    scratch = Field(u, u0.L)
    for step in range(1, n + 1):
        scratch.values = u
        u = u * np.exp(-1j * half * _density_potential(scratch, cfg.b0, V_hat))
        u = np.fft.ifftn(prop * np.fft.fftn(u))
        scratch.values = u
        u = u * np.exp(-1j * half * _density_potential(scratch, cfg.b0, V_hat))
        if step % cfg.save_every == 0 or step == n:
            out_t.append(step * dt)
            out_u.append(u.copy())
    return Trajectory(np.array(out_t), np.array(out_u), u0.L, cfg, potential)


def solve_nls(u0: Field, cfg: SolverConfig, normalized: bool = True) -> Trajectory:
    """Strang split-step solution of i d_t u = -Lap u + b0 |u|^2 u."""
    return _strang(u0, cfg, None, None, normalized)


def sample_potential(V: Callable | np.ndarray, M: int, L: float, d: int = 1) -> np.ndarray:
    """V at the periodic displacements j h, using the nearest image of each displacement."""
    if not callable(V):
        arr = np.asarray(V, dtype=float)
        if arr.shape != (M,) * d:
            raise ConfigError(f"sampled potential must have shape {(M,) * d}")
        return arr
    x = np.arange(M) * (L / M)
    x = np.where(x >= L / 2, x - L, x)
    if d == 1:
        return np.asarray(V(x), dtype=float)
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    return np.asarray(V(np.sqrt(sum(m * m for m in mesh))), dtype=float)


def solve_hartree(u0: Field, V: Callable | np.ndarray, cfg: SolverConfig, normalized: bool = True) -> Trajectory:
    """Strang split-step solution of i d_t u = -Lap u + (V * |u|^2) u; V sampled on the grid.

    ``cfg.b0`` is ignored by the dynamics; it is kept in the header.
    """
    pot = sample_potential(V, u0.M, u0.L, u0.d)
    return _strang(u0, cfg, np.fft.fftn(pot), pot, normalized)


def gaussian_bump(width: float, b0: float = 1.0) -> Callable:
    """b0 times a normalized 1D Gaussian of the given width."""
    return lambda x: b0 * np.exp(-0.5 * (np.asarray(x) / width) ** 2) / (math.sqrt(2 * math.pi) * width)


# ---- presets and exact solutions


def plane_wave(k: int = 1, M: int = 256, L: float = 2 * math.pi) -> Field:
    x = np.arange(M) * (L / M)
    return Field(np.exp(2j * np.pi * k * x / L) / math.sqrt(L), L)


def plane_wave_exact(k: int, b0: float, t: float, M: int = 256, L: float = 2 * math.pi) -> np.ndarray:
    kk = 2 * np.pi * k / L
    A2 = 1.0 / L
    omega = kk * kk + b0 * A2
    return plane_wave(k, M, L).values * np.exp(-1j * omega * t)


def gaussian(sigma: float = 0.5, k0: float = 0.0, M: int = 256, L: float = 2 * math.pi, x0: float | None = None) -> Field:
    """Normalized Gaussian packet centred at x0 (default L/2) on the periodic grid."""
    x0 = L / 2 if x0 is None else x0
    x = np.arange(M) * (L / M)
    dx = (x - x0 + L / 2) % L - L / 2
    u = np.exp(-0.5 * (dx / sigma) ** 2 + 1j * k0 * dx)
    return Field(u, L).normalized()


def gaussian_free_exact(sigma: float, k0: float, t: float, M: int = 256, L: float = 2 * math.pi, x0: float | None = None, images: int = 40) -> np.ndarray:
    """Free evolution of the Gaussian packet on the line, periodized by summing images.

    Uses the closed form for i d_t u = -u'' with initial data exp(-x^2/(2 s^2) + i k0 x).
    """
    x0 = L / 2 if x0 is None else x0
    x = np.arange(M) * (L / M)
    s2 = sigma * sigma
    z = s2 + 2j * t
    out = np.zeros(M, dtype=complex)
    for n in range(-images, images + 1):
        y = x - x0 + n * L
        out += np.sqrt(s2 / z) * np.exp(-((y - 2 * k0 * t) ** 2) / (2 * z) + 1j * k0 * y - 1j * k0 * k0 * t)
    # same normalization as the periodized initial packet
    dx0 = (x - x0 + L / 2) % L - L / 2
    norm0 = math.sqrt(float(np.sum(np.exp(-((dx0 / sigma) ** 2)))) * L / M)
    return out / norm0


# ---- factorized densities and the Gross-Pitaevskii hierarchy


@dataclass
class ProductKernel:
    """gamma^(k)(x; x') = prod_j u(x_j) conj(u(x'_j)) on the grid, stored by its factor.

    The explicit kernel has M^(2k) entries; ``matrix`` builds it for small grids.
    """

    u: Field
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def trace(self) -> float:
        return self.u.norm() ** (2 * self.k)

    def hs_norm(self) -> float:
        return self.u.norm() ** (2 * self.k)

    def data(self) -> np.ndarray:
        """Kernel values with axes (x_1..x_k, x'_1..x'_k), flattened spatial axes when d > 1."""
        v = self.u.values.ravel()
        left = v
        for _ in range(self.k - 1):
            left = np.multiply.outer(left, v)
        return np.multiply.outer(left, left.conj())

    def matrix(self) -> np.ndarray:
        """Operator matrix on the grid (kernel times cell volume^k)."""
        n = self.u.values.size**self.k
        return self.data().reshape(n, n) * self.u.cell**self.k


def factorized_density(u: Field, k: int) -> ProductKernel:
    return ProductKernel(u, k)


def _time_derivative(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """i d_t u at interior stored times, in the interaction picture.

    w_t = exp(-i Lap t) u_t is differenced with 4th-order central stencils,
    and i d_t u = -Lap u + exp(i Lap t) i d_t w.  For free evolution w is
    constant and the derivative is exact up to rounding.
    """
    t = traj.times
    if len(t) < 5:
        raise ValueError("need at least 5 stored times")
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("stored times must be equally spaced (use save_every with n_steps divisible by it)")
    h = h[0]
    d = traj.values.ndim - 1
    k2 = wavenumbers_squared(traj.values.shape[1], traj.L, d)
    axes = tuple(range(1, d + 1))
    uh = np.fft.fftn(traj.values, axes=axes)
    phase = np.exp(1j * np.multiply.outer(t, k2))  # exp(-i Lap t) = exp(+i k^2 t)
    wh = uh * phase
    dwh = (wh[:-4] - 8 * wh[1:-3] + 8 * wh[3:-1] - wh[4:]) / (12 * h)
    idx = np.arange(2, len(t) - 2)
    ih = 1j * dwh / phase[idx] + k2 * uh[idx]
    return idx, np.fft.ifftn(ih, axes=axes)


def nls_residuals(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """rho = i d_t u + Lap u - N(u) at interior stored times (N(u) = b0|u|^2 u or (V*|u|^2)u)."""
    idx, idt = _time_derivative(traj)
    V_hat = None if traj.potential is None else np.fft.fftn(traj.potential)
    out = np.empty_like(idt)
    for n, i in enumerate(idx):
        u = traj.field(i)
        out[n] = idt[n] + laplacian(u) - _density_potential(u, traj.config.b0, V_hat) * u.values
    return idx, out


def _hs_factorized(u: np.ndarray, rho: np.ndarray, cell: float, k: int) -> float:
    """HS norm of sum_j (rho (x) conj u - u (x) conj rho)_j tensor (u (x) conj u)^(k-1)."""
    ip = lambda a, b: np.vdot(a, b) * cell
    nu2 = ip(u, u).real
    nr2 = ip(rho, rho).real
    a2 = 2 * nr2 * nu2 - 2 * (ip(rho, u) ** 2).real
    pa = 2j * nu2 * ip(u, rho).imag  # <P, a>
    total = k * a2 * nu2 ** (2 * (k - 1))
    if k > 1:
        total += k * (k - 1) * abs(pa) ** 2 * nu2 ** (2 * (k - 2))
    return math.sqrt(max(total, 0.0))


def gp_hierarchy_residual(traj: Trajectory, k: int, b0: float | None = None, times: slice | None = None) -> float:
    """Max over stored interior times of the HS norm of both sides of the GP hierarchy, subtracted.

    gamma^(k) and gamma^(k+1) are the factorized densities of the trajectory.
    The delta contraction sets x_{k+1} = x_j on the grid, so it gives
    b0 |u(x_j)|^2 times gamma^(k); the residual therefore has the closed
    Hilbert-Schmidt form of ``_hs_factorized``.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    if b0 is not None and b0 != traj.config.b0:
        traj = Trajectory(traj.times, traj.values, traj.L, SolverConfig(traj.config.T, traj.config.step, b0), traj.potential)
    idx, rho = nls_residuals(traj)
    cell = (traj.L / traj.values.shape[1]) ** (traj.values.ndim - 1)
    sel = range(len(idx)) if times is None else range(len(idx))[times]
    return max(_hs_factorized(traj.values[idx[n]], rho[n], cell, k) for n in sel)


def gp_hierarchy_residual_explicit(traj: Trajectory, k: int, b0: float | None = None, times: slice | None = None) -> float:
    """Same quantity with gamma^(k), gamma^(k+1) built as explicit grid kernels (1D, small M only).

    The time derivative uses the same interaction-picture stencil applied to
    the kernels; the kinetic term is a spectral Laplacian on every axis and
    the contraction reads the x_{k+1} = x_j diagonal of gamma^(k+1).
    """
    if traj.values.ndim != 2:
        raise ValueError("explicit kernels are implemented in 1D")
    b0 = traj.config.b0 if b0 is None else b0
    M = traj.values.shape[1]
    t = traj.times
    h = t[1] - t[0]
    k2 = wavenumbers_squared(M, traj.L)
    cell = traj.L / M
    idx = np.arange(2, len(t) - 2)
    sel = idx if times is None else idx[times]

    def kern(i, order):
        return ProductKernel(traj.field(i), order).data()

    def lap_all(g):
        out = np.zeros_like(g)
        for ax in range(g.ndim):
            gh = np.fft.fft(g, axis=ax)
            shape = [1] * g.ndim
            shape[ax] = M
            term = np.fft.ifft(-k2.reshape(shape) * gh, axis=ax)
            out += term if ax < g.ndim // 2 else -term
        return out  # sum_j (Lap_{x_j} - Lap_{x'_j}) g

    def to_interaction(g, tt):
        gh = np.fft.fftn(g)
        ph = np.ones(gh.shape)
        for ax in range(g.ndim):
            shape = [1] * g.ndim
            shape[ax] = M
            sign = 1 if ax < g.ndim // 2 else -1
            ph = ph * np.exp(1j * sign * k2 * tt).reshape(shape)
        return gh * ph, ph

    worst = 0.0
    for i in sel:
        ws = []
        for j in range(i - 2, i + 3):
            wh, ph = to_interaction(kern(j, k), t[j])
            ws.append(wh)
            if j == i:
                ph_i = ph
        dwh = (ws[0] - 8 * ws[1] + 8 * ws[3] - ws[4]) / (12 * h)
        g = kern(i, k)
        lhs = np.fft.ifftn(1j * dwh / ph_i) - lap_all(g)  # i d_t gamma
        g1 = kern(i, k + 1)
        # D[x_1..x_k, x'_1..x'_k, a] = gamma^(k+1) with x_{k+1} = x'_{k+1} = a
        D = np.diagonal(g1, axis1=k, axis2=2 * k + 1)
        contr = np.zeros_like(g)
        for j in range(k):
            plus = np.moveaxis(np.diagonal(D, axis1=j, axis2=2 * k), -1, j)
            minus = np.moveaxis(np.diagonal(D, axis1=k + j, axis2=2 * k), -1, k + j)
            contr += b0 * (plus - minus)
        rhs = -lap_all(g) + contr
        res = lhs - rhs
        worst = max(worst, math.sqrt(float(np.sum(np.abs(res) ** 2))) * cell**k)
    return worst


def order_fit(hs, errs) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(np.asarray(hs, float)), np.log(np.asarray(errs, float)), 1)[0])
