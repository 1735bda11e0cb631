"""Exact alpha integration for tree amplitudes.

A subtree function is a finite sum of poles stored as a dict
``{(E, m): c}`` meaning ``sum c / (alpha - E*unit + i*o*eta)^m``, where o is
the orientation of the subtree's top edge and eta its regulator.  All poles of
one function share the imaginary part ``-o*eta`` (the regulators add up along
the tree), so coincident poles are detected by comparing the integer energies
E exactly.  Every alpha integral uses the measure ``d alpha / (2 pi)``.
"""

from __future__ import annotations

import cmath
import math
from typing import Dict, Tuple

PoleDict = Dict[Tuple[int, int], complex]


def leaf(energy: int) -> PoleDict:
    return {(energy, 1): 1.0 + 0j}


def primitive(m: int, n: int, upper_w: bool) -> complex:
    """Coefficient of int dx/(2 pi) (x-a)^-m (x-w)^-n.

    With ``upper_w`` (Im a < 0 < Im w) the result is coef * (w-a)^-(m+n-1),
    otherwise (Im a > 0 > Im w) it is coef * (a-w)^-(m+n-1).  Poles on the
    same side give zero and are never requested here.
    """
    if upper_w:
        return 1j * (-1) ** (n - 1) * math.comb(m + n - 2, n - 1)
    return 1j * (-1) ** (m - 1) * math.comb(m + n - 2, m - 1)


def _add(out: PoleDict, key, c):
    out[key] = out.get(key, 0) + c


def convolve(f1: PoleDict, f2: PoleDict, f3: PoleDict, o: int) -> PoleDict:
    """H(alpha) = int int dalpha1 dalpha2 / (2 pi)^2 f1(a1) f2(a2) f3(a1 + a2 - alpha).

    f1, f2 carry orientation o and f3 the opposite one.  The result has poles at
    E1 + E2 - E3 with the combined regulator.
    """
    out: PoleDict = {}
    for (e1, m), c1 in f1.items():
        for (e3, r), c3 in f3.items():
            k1 = m + r - 1
            if o == 1:
                # (w - a)^-k1 with w - a = w2 - alpha2
                c13 = primitive(m, r, True) * (-1) ** k1
            else:
                c13 = primitive(m, r, False)
            for (e2, n), c2 in f2.items():
                k = n + k1 - 1
                if o == 1:
                    c = c13 * primitive(n, k1, True)
                else:
                    c = c13 * primitive(n, k1, False) * (-1) ** k
                _add(out, (e1 + e2 - e3, k), c * c1 * c2 * c3)
    return out


def times_propagator(f: PoleDict, energy: int, unit: float) -> PoleDict:
    """Multiply by 1/(alpha - energy*unit + i o eta) (same regulator as f)."""
    out: PoleDict = {}
    for (e, k), c in f.items():
        if e == energy:
            _add(out, (e, k + 1), c)
            continue
        d = (energy - e) * unit
        _add(out, (energy, 1), c * d ** (-k))
        for j in range(1, k + 1):
            _add(out, (e, j), -c * d ** (-(k - j + 1)))
    return out


def root_transform(f: PoleDict, tau: int, t: float, unit: float) -> complex:
    """int dalpha/(2 pi) exp(-i tau t alpha) exp(t eta) f(alpha), in closed form."""
    total = 0j
    for (e, m), c in f.items():
        phase = cmath.exp(-1j * tau * t * e * unit)
        total += c * (-1j * tau) * (-1j * tau * t) ** (m - 1) / math.factorial(m - 1) * phase
    return total


def evaluate(f: PoleDict, alpha: complex, o: int, eta: float, unit: float) -> complex:
    return sum(c / (alpha - e * unit + 1j * o * eta) ** m for (e, m), c in f.items())

