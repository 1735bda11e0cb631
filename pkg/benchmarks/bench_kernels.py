"""Compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time of each kernel for both backends, the speedup and
the largest difference between their outputs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from nlsderive import _fallback
from nlsderive.manybody.fock import basis

try:
    from nlsderive import _core
except ImportError:  # pragma: no cover
    _core = None


def cases():
    rng = np.random.default_rng(0)
    n = 1 << 20
    x = rng.standard_normal(n)
    w = rng.uniform(0.5, 1.5, n)
    p = np.ascontiguousarray(rng.standard_normal((n, 3)))
    c = np.array([0.3, -0.2, 0.1])
    B = basis(6, 14)
    yield "resolvent_sum (2^20 pts)", "resolvent_sum", (x, w, 1.3, 0.7, 1.1)
    yield "resolvent_sphere_sum (2^20 pts)", "resolvent_sphere_sum", (x, w, p, 1.3, 0.7, 1.1, 0.4, c)
    yield f"hop_targets (dim {B.dim}, M {B.M})", "hop_targets", (np.ascontiguousarray(B.occ), B.table, 3, 4)


def _diff(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled extension not built; only the fallback is available")
        return
    print(f"{'kernel':40s} {'cython ms':>10s} {'numpy ms':>10s} {'speedup':>8s} {'max diff':>10s}")
    for label, name, a in cases():
        fast, slow = getattr(_core, name), getattr(_fallback, name)
        tc = min(timeit.repeat(lambda: fast(*a), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: slow(*a), number=1, repeat=args.repeat))
        d = _diff(fast(*a), slow(*a))
        print(f"{label:40s} {1e3 * tc:10.2f} {1e3 * tp:10.2f} {tp / tc:8.1f} {d:10.2e}")


if __name__ == "__main__":
    main()
