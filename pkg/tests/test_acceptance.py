"""Desk-scale acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (shown in the terminal summary)
and then asserts.  Tolerances are the contract values.
"""

import math
import time

import numpy as np

from nlsderive import graphs, pde
from nlsderive.amplitudes import (
    MomentumLattice,
    QuadratureSpec,
    evaluate_K,
    random_symmetric_kernel,
    remainder_sides,
    verify_fullexp,
)
from nlsderive.manybody import (
    Lattice,
    PotentialSpec,
    bbgky_residual,
    build_hamiltonian,
    convergence_study,
    decay_study,
    evolve_many,
    marginal,
    power_fit,
    product_state,
    radial_bump,
    regularize_initial,
    scattering_length,
    square_barrier_length,
    tail_state,
)
from nlsderive.scheme.inequalities import LEMMAS, default_case, validate_inequality
from nlsderive.scheme.schedule import closure

LAT5 = MomentumLattice(5, 1.0)


def test_criterion_01_counting(criterion):
    t0 = time.perf_counter()
    checks = [len(graphs.enumerate_marked_trees(n)) == graphs.catalan(n) for n in range(11)]
    checks += [graphs.count_ordered_trees(n) == math.factorial(n) for n in range(8)]
    checks += [
        graphs.count_ordered_forests(n, k) == math.factorial(n + k - 1) // math.factorial(k - 1)
        for n in range(6)
        for k in (1, 2, 3)
    ]
    checks.append(len(graphs.enumerate_feynman(1, 1)) == 2)
    checks += [len(graphs.enumerate_feynman(n, k)) <= 2 ** (4 * n + k) for n in range(5) for k in (1, 2)]
    elapsed = time.perf_counter() - t0
    ok = all(checks) and elapsed < 60
    criterion(1, ok, f"{sum(checks)}/{len(checks)} exact counts, {elapsed:.1f}s")
    assert ok


def test_criterion_02_graph_representation(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for n, k in [(1, 1), (2, 1), (1, 2)]:
        g0 = random_symmetric_kernel(LAT5, n + k, rng)
        for t in (0.1, 0.3):
            rep, _, _ = verify_fullexp(n, k, t, g0)
            worst = max(worst, rep.max_abs_diff)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 600
    criterion(2, ok, f"max |graph sum - Duhamel term| = {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_eta_independence(criterion):
    rng = np.random.default_rng(3)
    quad = QuadratureSpec(method="quadrature")
    worst, count = 0.0, 0
    for n in (0, 1, 2):
        g0 = random_symmetric_kernel(LAT5, n + 1, rng)
        for g in graphs.enumerate_feynman(n, 1):
            vals = []
            for _ in range(3):
                eta = {leaf: float(rng.uniform(0.3, 3.0)) for leaf in g.leaves}
                vals.append(evaluate_K(g, 0.3, g0, eta=eta, spec=quad).data)
            scale = max(float(np.max(np.abs(v))) for v in vals)
            worst = max(worst, max(float(np.max(np.abs(v - vals[0]))) for v in vals) / scale)
            count += 1
    ok = worst < 1e-5
    criterion(3, ok, f"{count} graphs, max relative spread over 3 leaf-eta draws = {worst:.2e}")
    assert ok


def test_criterion_04_kernel_vanishes_at_zero(criterion):
    rng = np.random.default_rng(4)
    worst, count = 0.0, 0
    for n, k in [(1, 1), (2, 1), (1, 2), (3, 1)]:
        lat = MomentumLattice(3, 1.0) if n + k > 3 else LAT5
        g0 = random_symmetric_kernel(lat, n + k, rng)
        for g in graphs.enumerate_feynman(n, k):
            worst = max(worst, float(np.max(np.abs(evaluate_K(g, 0.0, g0).data))))
            count += 1
    ok = worst < 1e-6
    criterion(4, ok, f"{count} graphs with n >= 1, max |K(t=0) gamma0| = {worst:.2e}")
    assert ok


def test_criterion_05_remainder_identity(criterion):
    rng = np.random.default_rng(5)
    worst = 0.0
    for t in (0.1, 0.3):
        g = random_symmetric_kernel(LAT5, 2, rng)
        lhs, rhs = remainder_sides(t, g)
        worst = max(worst, float(np.max(np.abs(lhs.data - rhs.data))))
    ok = worst < 1e-4
    criterion(5, ok, f"n=1, k=1 remainder sides differ by {worst:.2e}")
    assert ok


def test_criterion_06_scheme_closure(criterion):
    graphs_seen = schedules = failures = 0
    for k in (1, 2):
        for n in range(5):
            rep = closure(n, k)
            graphs_seen += rep.graphs
            schedules += rep.schedules
            failures += len(rep.failures)
    ok = failures == 0
    criterion(6, ok, f"{schedules} schedules over {graphs_seen} graphs, {failures} failures")
    assert ok


def test_criterion_07_inequality_validators(criterion):
    parts, ok = [], True
    for lemma in LEMMAS:
        t0 = time.perf_counter()
        rep = validate_inequality(default_case(lemma), samples=10_000, seed=0)
        elapsed = time.perf_counter() - t0
        good = rep.passed and elapsed < 300
        ok &= good
        parts.append(f"{lemma} {rep.max_ratio_half:.4g}->{rep.max_ratio:.4g} ({elapsed:.0f}s){'' if good else ' FAIL'}")
    criterion(7, ok, "; ".join(parts))
    assert ok


def test_criterion_08_nls(criterion):
    disp = 0.0
    for k in (1, 2, 3):
        for b0 in (0.0, 1.0, 4.0):
            traj = pde.solve_nls(pde.plane_wave(k), pde.SolverConfig(T=1.0, b0=b0, save_every=2048))
            disp = max(disp, float(np.abs(traj.values[-1] - pde.plane_wave_exact(k, b0, 1.0)).max()))
    packet = pde.gaussian(0.5, 1.0)
    m = pde.solve_nls(packet, pde.SolverConfig(T=1.0, b0=1.0, save_every=16)).masses()
    mass = float(np.abs(m - m[0]).max())
    E = pde.solve_nls(packet, pde.SolverConfig(T=1.0, dt=1 / 16384, b0=1.0, save_every=256)).energies()
    energy = float(np.abs(E - E[0]).max() / E[0])
    orders = []
    for kk in (1, 2):
        hs, res = [], []
        for n in (128, 256, 512, 1024):
            traj = pde.solve_nls(packet, pde.SolverConfig(T=0.5, dt=0.5 / n, b0=1.0))
            hs.append(0.5 / n)
            res.append(pde.gp_hierarchy_residual(traj, kk))
        orders.append(pde.order_fit(hs, res))
    ok = disp < 1e-6 and mass < 1e-10 and energy < 1e-8 and min(orders) >= 1.9
    criterion(
        8,
        ok,
        f"plane-wave err {disp:.1e}, mass drift {mass:.1e}, energy drift {energy:.1e} (dt=1/16384), "
        f"hierarchy orders {orders[0]:.3f}/{orders[1]:.3f}",
    )
    assert ok


def test_criterion_09_many_body(criterion):
    lat = Lattice(12, 2 * math.pi / 12)
    H = build_hamiltonian(PotentialSpec.with_coupling(1.0, 0.4, 3), lat)
    phi = np.exp(1j * lat.x) * (1 + 0.3 * np.cos(lat.x))
    psi = product_state(phi / np.linalg.norm(phi), 3)
    # marginals along the evolution
    err = 0.0
    for s in evolve_many(psi, H, [0.0, 0.5, 1.0]):
        for k in (1, 2, 3):
            g = marginal(s, k)
            G = g.matrix
            err = max(err, abs(g.trace() - 1), float(np.abs(G - G.conj().T).max()), max(0.0, -np.linalg.eigvalsh(G).min()))
            if k >= 2:
                perm = [1, 0] + list(range(2, k)) + [k + 1, k] + list(range(k + 2, 2 * k))
                err = max(err, float(np.abs(g.data() - g.data().transpose(perm)).max()))
    # BBGKY refinement with the fourth-order stencil
    dts = [0.04, 0.02, 0.01]
    res = []
    for dt in dts:
        ts = np.arange(9) * dt
        res.append(bbgky_residual(evolve_many(psi, H, ts), ts, H, 1))
    slope = power_fit(dts, res)[0]
    # initial-data cutoff
    big = Lattice(64, 2 * math.pi / 64)
    kappas = 2.0 ** -np.arange(1, 7)
    exps = []
    for N in (1, 2):
        HN = build_hamiltonian(PotentialSpec.with_coupling(1.0, 0.4, N), big)
        p0 = product_state(tail_state(big), N)
        exps.append(power_fit(kappas, [regularize_initial(p0, kap, HN)[1] for kap in kappas])[0])
    # mean-field trend
    rows = convergence_study([2, 3, 4, 5, 6], beta=0.4, t=0.5, M=12)
    d2, d6 = rows[0].distance, rows[-1].distance
    ok = err < 1e-12 and abs(slope - 4) <= 0.3 and all(abs(p - 0.5) <= 0.1 for p in exps) and d6 < d2
    criterion(
        9,
        ok,
        f"marginal err {err:.1e}, BBGKY slope {slope:.2f} (order 4), cutoff exponents "
        f"{exps[0]:.3f}/{exps[1]:.3f}, distance N=2 {d2:.4f} > N=6 {d6:.4f}",
    )
    assert ok


def test_criterion_10_scattering(criterion):
    t0 = time.perf_counter()
    # every solve checks 8 pi a_N <= b0/N and the lower envelope, raising otherwise
    Ns, errs, slope = decay_study(0.5, (10, 100, 1000, 10000), radial_bump(1.0, 1.0))
    oracle = max(
        abs(scattering_length(lambda s, v=V0: v, 1, 0.0, R).a - square_barrier_length(V0, R))
        for V0, R in [(1.0, 1.0), (10.0, 2.0), (0.3, 0.5), (50.0, 1.0)]
    )
    solves = [scattering_length(radial_bump(3.0, 1.0), N, b) for b in (0.3, 0.5, 0.7) for N in (10, 1000)]
    bounds = all(8 * math.pi * r.a <= r.b0 / r.N for r in solves)
    elapsed = time.perf_counter() - t0
    ok = abs(slope - (-0.5)) <= 0.1 and oracle < 1e-8 and bounds and elapsed < 60
    criterion(10, ok, f"decay exponent {slope:.3f} (beta-1 = -0.5), square barrier err {oracle:.1e}, bounds hold, {elapsed:.2f}s")
    assert ok
