# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; _fallback.py holds the numpy reference versions."""

import numpy as np

from libc.math cimport exp, log, sqrt


def resolvent_sum(const double[::1] x, const double[::1] w, double alpha, double r2, double s):
    """Mean and standard error of w (1 + (alpha - r2 x)^2)^{-s/2}."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double y, t, acc = 0.0, acc2 = 0.0, hs = -0.5 * s
    for i in range(n):
        y = alpha - r2 * x[i]
        t = w[i] * exp(hs * log(1.0 + y * y))
        acc += t
        acc2 += t * t
    return _mean_err(acc, acc2, n)


def resolvent_sphere_sum(const double[::1] x, const double[::1] w, const double[:, ::1] p,
                         double alpha, double r2, double s, double beta, c):
    """As resolvent_sum with the extra factor (1 + (beta + r2 |p - c|^2)^2)^{-s/2}."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double c0 = c[0], c1 = c[1], c2 = c[2]
    cdef double y, z, d0, d1, d2, t, acc = 0.0, acc2 = 0.0, hs = -0.5 * s
    for i in range(n):
        y = alpha - r2 * x[i]
        d0 = p[i, 0] - c0
        d1 = p[i, 1] - c1
        d2 = p[i, 2] - c2
        z = beta + r2 * (d0 * d0 + d1 * d1 + d2 * d2)
        t = w[i] * exp(hs * (log(1.0 + y * y) + log(1.0 + z * z)))
        acc += t
        acc2 += t * t
    return _mean_err(acc, acc2, n)


cdef tuple _mean_err(double acc, double acc2, Py_ssize_t n):
    cdef double mean = acc / n
    cdef double var = acc2 / n - mean * mean
    return mean, (sqrt(var / n) if var > 0 else 0.0)


def hop_targets(const long long[:, ::1] occ, const long long[:, :, ::1] table, Py_ssize_t src, Py_ssize_t dst):
    """Rank of each occupation row after moving one boson src -> dst (dst < 0: removal); -1 if site src is empty."""
    cdef Py_ssize_t s, x, n, P, dim = occ.shape[0], M = occ.shape[1]
    cdef long long r
    out = np.empty(dim, dtype=np.int64)
    cdef long long[::1] o = out
    for s in range(dim):
        if occ[s, src] == 0:
            o[s] = -1
            continue
        r = 0
        P = 0
        for x in range(M):
            n = occ[s, x]
            if x == src:
                n -= 1
            if x == dst:
                n += 1
            r += table[x, P, n]
            P += n
        o[s] = r
    return out
