"""Pure numpy versions of the compiled kernels (same signatures and results)."""

from __future__ import annotations

import numpy as np


def resolvent_sum(x, w, alpha, r2, s):
    """Mean and standard error of w_i <alpha - r2 x_i>^{-s}."""
    t = w * (1.0 + (alpha - r2 * x) ** 2) ** (-0.5 * s)
    n = t.size
    return float(t.mean()), float(t.std() / np.sqrt(n))


def resolvent_sphere_sum(x, w, p, alpha, r2, s, beta, c):
    """As resolvent_sum with the extra factor <beta + r2 |p_i - c|^2>^{-s}."""
    d2 = ((p - c) ** 2).sum(axis=1)
    t = w * (1.0 + (alpha - r2 * x) ** 2) ** (-0.5 * s) * (1.0 + (beta + r2 * d2) ** 2) ** (-0.5 * s)
    n = t.size
    return float(t.mean()), float(t.std() / np.sqrt(n))


def hop_targets(occ, table, src, dst):
    """Rank of each occupation row after moving one boson src -> dst (dst < 0: removal); -1 if site src is empty."""
    occ = np.array(occ, dtype=np.int64)
    empty = occ[:, src] == 0
    occ[:, src] -= 1
    if dst >= 0:
        occ[:, dst] += 1
    occ[empty] = 0
    prefix = np.cumsum(occ, axis=1) - occ
    ranks = table[np.arange(occ.shape[1]), prefix, occ].sum(axis=1)
    ranks[empty] = -1
    return ranks
