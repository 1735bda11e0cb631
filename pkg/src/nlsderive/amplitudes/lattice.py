"""Momentum lattice, density kernels, free evolution and the collision operator.

A kernel of order k is a complex array with 2k axes of length M, ordered
``(p_1, ..., p_k, p'_1, ..., p'_k)``.  Momenta are ``m * dp`` with
``|m| <= (M - 1) / 2``; the box length is ``L = 2 pi / dp`` and plane
waves are normalised as ``exp(i p x) / sqrt(L)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MomentumLattice:
    modes: int = 5
    dp: float = 1.0

    def __post_init__(self):
        if self.modes < 1 or self.modes % 2 == 0:
            raise ValueError("mode count must be odd and positive")
        if not self.dp > 0:
            raise ValueError("momentum spacing must be positive")

    @property
    def half(self) -> int:
        return (self.modes - 1) // 2

    @property
    def m(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1)

    @property
    def p(self) -> np.ndarray:
        return self.m * self.dp

    @property
    def length(self) -> float:
        return 2 * np.pi / self.dp

    def index(self, m: int) -> int:
        return m + self.half

    def contains(self, m: int) -> bool:
        return -self.half <= m <= self.half


@dataclass
class DensityKernel:
    data: np.ndarray
    lattice: MomentumLattice

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim % 2 or any(s != self.lattice.modes for s in self.data.shape):
            raise ValueError("kernel must have 2k axes of length M")

    @property
    def order(self) -> int:
        return self.data.ndim // 2

    def matrix(self) -> np.ndarray:
        d = self.lattice.modes**self.order
        return self.data.reshape(d, d)

    def trace(self) -> complex:
        return np.trace(self.matrix())

    def adjoint(self) -> "DensityKernel":
        return DensityKernel(self.matrix().conj().T.reshape(self.data.shape), self.lattice)

    def permuted(self, perm) -> "DensityKernel":
        """Kernel with particle slots relabelled by ``perm`` on both sides."""
        k = self.order
        axes = list(perm) + [k + p for p in perm]
        return DensityKernel(self.data.transpose(axes), self.lattice)

    def __add__(self, other):
        return DensityKernel(self.data + other.data, self.lattice)

    def __sub__(self, other):
        return DensityKernel(self.data - other.data, self.lattice)

    def __mul__(self, c):
        return DensityKernel(self.data * c, self.lattice)

    __rmul__ = __mul__


def kinetic_phase(lattice: MomentumLattice, k: int) -> np.ndarray:
    """sum_j p_j^2 - p'_j^2 broadcast over a kernel of order k."""
    p2 = lattice.p**2
    out = np.zeros((lattice.modes,) * (2 * k))
    for axis in range(2 * k):
        shape = [1] * (2 * k)
        shape[axis] = lattice.modes
        out = out + (p2 if axis < k else -p2).reshape(shape)
    return out


def free_evolution(gamma: DensityKernel, t: float) -> DensityKernel:
    phase = kinetic_phase(gamma.lattice, gamma.order)
    return DensityKernel(gamma.data * np.exp(-1j * t * phase), gamma.lattice)


def _shift(arr: np.ndarray, axis: int, d: int) -> np.ndarray:
    """out[..., i, ...] = arr[..., i + d, ...], zero where i + d leaves the window."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    if abs(d) >= n:
        return out
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if d >= 0:
        src[axis] = slice(d, n)
        dst[axis] = slice(0, n - d)
    else:
        src[axis] = slice(0, n + d)
        dst[axis] = slice(-d, n)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def apply_B(gamma: DensityKernel, b0: float) -> DensityKernel:
    """Collision operator mapping an order k+1 kernel to order k.

    (B g)(p; p') = -i b0 / L sum_j sum_{q, q'} [ g(.., p_j - q + q', .., q; p', q')
                                                - g(p, q; .., p'_j + q - q', .., q') ]
    with terms outside the momentum window dropped.
    """
    K1 = gamma.order
    if K1 < 2:
        raise ValueError("collision operator needs a kernel of order >= 2")
    k = K1 - 1
    M = gamma.lattice.modes
    a = gamma.data
    # S[d] = sum over q' - q = d of g(.., q; .., q'), an order-k array
    diag = {}
    for q in range(M):
        for qq in range(M):
            sl = [slice(None)] * (2 * K1)
            sl[k] = q
            sl[2 * K1 - 1] = qq
            d = qq - q
            block = a[tuple(sl)]
            diag[d] = diag.get(d, 0) + block
    out = np.zeros((M,) * (2 * k), dtype=complex)
    for d, block in diag.items():
        for j in range(k):
            # unprimed slot j reads p_j - q + q' = p_j + d
            out += _shift(block, j, d)
            # primed slot j reads p'_j + q - q' = p'_j - d
            out -= _shift(block, k + j, -d)
    return DensityKernel(out * (-1j * b0 / gamma.lattice.length), gamma.lattice)


def product_kernel(phis, weights, lattice: MomentumLattice, order: int) -> DensityKernel:
    """sum_r w_r |phi_r^{(x) order}><phi_r^{(x) order}| in momentum space.

    Hermitian, positive and symmetric under particle exchange.
    """
    M = lattice.modes
    out = np.zeros((M,) * (2 * order), dtype=complex)
    for phi, w in zip(phis, weights):
        phi = np.asarray(phi, dtype=complex)
        ket = phi
        for _ in range(order - 1):
            ket = np.multiply.outer(ket, phi)
        out += w * np.multiply.outer(ket, ket.conj())
    return DensityKernel(out, lattice)


def random_symmetric_kernel(lattice: MomentumLattice, order: int, rng, terms: int = 3) -> DensityKernel:
    """Random normalised mixture of product states."""
    phis = []
    for _ in range(terms):
        v = rng.normal(size=lattice.modes) + 1j * rng.normal(size=lattice.modes)
        phis.append(v / np.linalg.norm(v))
    w = rng.uniform(0.2, 1.0, size=terms)
    return product_kernel(phis, w / w.sum(), lattice, order)
