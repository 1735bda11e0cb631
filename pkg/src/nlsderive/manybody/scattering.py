"""Zero-energy radial scattering for (1/N) V_N with V_N(x) = N^{3 beta} V(N^beta x) in 3D.

With g(r) = r f(r) the equation is g'' = (N^{3 beta - 1}/2) V(N^beta r) g.  In the
variable s = N^beta r this becomes u'' = lam V(s) u with lam = N^{beta - 1}/2,
and a_N = N^{-beta} a_s, where u(s) = s - a_s beyond the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

RTOL = 1e-13


class ScatteringError(RuntimeError):
    """Step-size underflow or a violated scattering bound."""


def radial_bump(V0: float = 1.0, R: float = 1.0) -> Callable[[float], float]:
    def V(s: float) -> float:
        u = (s / R) ** 2
        return V0 * math.exp(1.0 - 1.0 / (1.0 - u)) if u < 1 else 0.0

    return V


def square_barrier_length(V0: float, R: float) -> float:
    """Scattering length of (1/2) V0 on the ball of radius R."""
    if V0 == 0:
        return 0.0
    q = math.sqrt(V0 / 2)
    return R - math.tanh(q * R) / q


def integrate_radial(lam: float, V: Callable[[float], float], R: float, breakpoints=(), rtol: float = RTOL):
    """Adaptive RK4 (step doubling with Richardson correction) for u'' = lam V u, u(0)=0, u'(0)=1.

    Integrates w = (u - s)/lam, so w'' = V (s + lam w) with w(0) = w'(0) = 0, and the
    tolerance applies to the interaction part rather than to u ~ s.  Weak coupling
    would otherwise lose the scattering length to the absolute error in u.
    Returns node positions and the (w, w') values there.
    """
    edges = sorted({0.0, R, *[b for b in breakpoints if 0 < b < R]})
    s_nodes, y_nodes = [0.0], [np.array([0.0, 0.0])]
    y = y_nodes[0]
    h = R * 1e-3
    hmin = R * 1e-14
    for a, b in zip(edges[:-1], edges[1:]):
        s = a

        def f(yy, ss):
            return np.array([yy[1], V(ss) * (ss + lam * yy[0])])

        while s < b:
            h = min(h, b - s)
            full = _step(f, y, s, h)
            half = _step(f, _step(f, y, s, h / 2), s + h / 2, h / 2)
            err = np.abs(half - full).max() / 15
            scale = rtol * (1 + np.abs(half).max())
            if err <= scale:
                s = b if b - s - h < 1e-15 * R else s + h
                y = half + (half - full) / 15
                s_nodes.append(s)
                y_nodes.append(y)
            fac = 4.0 if err == 0 else min(4.0, max(0.1, 0.9 * (scale / err) ** 0.2))
            h *= fac
            if h < hmin:
                raise ScatteringError(f"step size underflow at s={s:.6g}")
    return np.array(s_nodes), np.array(y_nodes)


def _step(f, y, s, h):
    k1 = f(y, s)
    k2 = f(y + 0.5 * h * k1, s + 0.5 * h)
    k3 = f(y + 0.5 * h * k2, s + 0.5 * h)
    k4 = f(y + h * k3, s + h)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def radial_b0(V: Callable[[float], float], R: float, breakpoints=()) -> float:
    pts = [b for b in breakpoints if 0 < b < R] or None
    return 4 * math.pi * integrate.quad(lambda s: s * s * V(s), 0, R, points=pts, epsabs=0, epsrel=1e-13, limit=200)[0]


@dataclass
class ScatteringResult:
    a: float  # a_N
    N: float
    beta: float
    b0: float
    r: np.ndarray  # nodes in the original radius
    g: np.ndarray  # g(r), normalized so that g = r - a_N beyond the support

    @property
    def born_ratio(self) -> float:
        """8 pi N a_N / b0, at most 1."""
        return 8 * math.pi * self.N * self.a / self.b0 if self.b0 > 0 else 0.0


def scattering_length(
    V: Callable[[float], float], N: float = 1, beta: float = 0.0, R: float = 1.0, breakpoints=(), rtol: float = RTOL
) -> ScatteringResult:
    """Scattering length of (1/N) V_N; checks 8 pi a_N <= b0/N and g(r) >= max(r - a_N, 0) at every node."""
    if N < 1 or not 0 <= beta < 1 or not R > 0:
        raise ValueError("need N >= 1, 0 <= beta < 1, R > 0")
    lam = N ** (beta - 1) / 2
    s, y = integrate_radial(lam, V, R, breakpoints, rtol)
    w, dw = y[:, 0], y[:, 1]
    u, du = s + lam * w, 1 + lam * dw
    # R - u/u' without cancelling against R
    a_s = lam * (R * dw[-1] - w[-1]) / du[-1]
    scale = N**-beta
    res = ScatteringResult(a_s * scale, N, beta, radial_b0(V, R, breakpoints), s * scale, u / du[-1] * scale)
    slack = 1e-10 * R * scale
    if 8 * math.pi * res.a > res.b0 / N * (1 + 1e-10) + slack:
        raise ScatteringError(f"upper bound violated: 8 pi a_N = {8 * math.pi * res.a:.6g} > b0/N = {res.b0 / N:.6g}")
    if np.any(res.g < -slack) or np.any(res.g < res.r - res.a - slack):
        raise ScatteringError("lower envelope g >= max(r - a_N, 0) violated")
    return res


def decay_study(beta: float = 0.5, Ns=(10, 100, 1000, 10000), V=None, R: float = 1.0):
    """Relative errors |8 pi N a_N - b0|/b0 and their fitted power of N."""
    V = radial_bump() if V is None else V
    errs = []
    for N in Ns:
        res = scattering_length(V, N, beta, R)
        errs.append(abs(res.born_ratio - 1.0))
    slope = float(np.polyfit(np.log(Ns), np.log(errs), 1)[0])
    return list(Ns), errs, slope
