import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsderive import _fallback, backend, caps
from nlsderive.manybody import (
    Lattice,
    ManyBodyState,
    PotentialSpec,
    ScatteringError,
    basis,
    bbgky_residual,
    build_hamiltonian,
    convergence_study,
    cutoff,
    decay_study,
    evolve,
    evolve_many,
    fock_dim,
    marginal,
    power_fit,
    product_state,
    pure_density,
    radial_bump,
    regularize_initial,
    scattering_length,
    sob_constant,
    sob_ratios,
    sobolev_trace,
    square_barrier_length,
    tail_state,
)
from nlsderive.manybody.dynamics import default_phi
from nlsderive.manybody.hamiltonian import DENSE_DIM

LAT = Lattice(12, 2 * math.pi / 12)


def random_state(N, M, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=fock_dim(N, M)) + 1j * rng.normal(size=fock_dim(N, M))
    return ManyBodyState(v / np.linalg.norm(v), N, M)


@pytest.fixture(scope="module")
def h3():
    return build_hamiltonian(PotentialSpec.with_coupling(1.0, 0.4, 3), LAT)


# ---- basis


@pytest.mark.parametrize("N,M", [(0, 3), (1, 5), (3, 4), (4, 6), (2, 12)])
def test_basis_ranks_are_a_bijection(N, M):
    B = basis(N, M)
    assert B.dim == math.comb(N + M - 1, N)
    assert np.array_equal(B.rank(B.occ), np.arange(B.dim))
    assert (B.occ.sum(axis=1) == N).all()
    assert len({tuple(r) for r in B.occ}) == B.dim


def test_compiled_and_numpy_hops_agree():
    B = basis(4, 7)
    for src, dst in [(0, 1), (3, 2), (6, 0), (2, -1)]:
        table = B.table if dst >= 0 else basis(3, 7).table
        ref = _fallback.hop_targets(B.occ, table, src, dst)
        assert np.array_equal(backend.hop_targets(B.occ, table, src, dst), ref)


def test_fock_cap(monkeypatch):
    monkeypatch.setenv("NLSDERIVE_CAPS", "fock_dim=100")
    with pytest.raises(caps.CapExceeded):
        basis.__wrapped__(3, 12)


def test_product_state_is_normalized():
    phi = default_phi(LAT)
    assert product_state(phi, 4).norm() == pytest.approx(1.0, abs=1e-13)


# ---- Hamiltonian


def test_single_particle_is_cosine_band():
    H = build_hamiltonian(PotentialSpec.with_coupling(2.0, 0.4, 1), LAT)
    assert np.allclose(np.sort(H.eig[0]), np.sort(LAT.band()), atol=1e-12)


@pytest.mark.parametrize("N", [2, 3])
def test_hamiltonian_hermitian(N):
    H = build_hamiltonian(PotentialSpec.with_coupling(1.0, 0.4, N), LAT).matrix
    assert abs(H - H.conj().T).max() == 0.0


def test_free_energy_is_sum_of_one_body_energies():
    H = build_hamiltonian(PotentialSpec.with_coupling(0.0, 0.4, 3), LAT)
    x = LAT.x
    phi = np.exp(2j * x) / math.sqrt(LAT.M)
    assert H.energy(product_state(phi, 3)) == pytest.approx(3 * LAT.band()[2], rel=1e-12)
    mixed = default_phi(LAT)
    one = np.vdot(mixed, LAT.kinetic() @ mixed).real
    assert H.energy(product_state(mixed, 3)) == pytest.approx(3 * one, rel=1e-12)


def test_hamiltonian_nonnegative(h3):
    assert h3.eig[0].min() > -1e-12


@pytest.mark.parametrize("beta", [0.0, 0.4, 0.9])
@pytest.mark.parametrize("N", [1, 10, 1000])
def test_lattice_potential_keeps_b0(beta, N):
    W = PotentialSpec.with_coupling(1.7, beta, N).lattice_values(LAT)
    assert W.sum() * LAT.h == pytest.approx(1.7, rel=1e-11)
    assert W.min() >= 0 and np.allclose(W[1:], W[1:][::-1])


def test_potential_spec_validation():
    with pytest.raises(ValueError):
        PotentialSpec(lambda x: -np.ones_like(x))
    with pytest.raises(ValueError):
        PotentialSpec(beta=1.2)
    with pytest.raises(ValueError):
        PotentialSpec.with_coupling(-1.0)


def test_pair_interaction_counts_pairs():
    spec = PotentialSpec.with_coupling(1.0, 0.4, 3)
    H = build_hamiltonian(spec, LAT)
    B = basis(3, LAT.M)
    i = B.index([3] + [0] * 11)
    kin = 3 * 2 / LAT.h**2
    assert H.matrix[i, i] == pytest.approx(kin + 3 * H.W[0] / 3, rel=1e-13)


# ---- evolution


def test_evolve_identity_at_zero(h3):
    psi = random_state(3, 12, 1)
    assert np.allclose(evolve(psi, h3, 0.0).amps, psi.amps, atol=1e-13)


def test_evolve_conserves_norm_and_energy(h3):
    psi = product_state(default_phi(LAT), 3)
    states = evolve_many(psi, h3, np.linspace(0, 1, 6))
    E0 = h3.energy(psi)
    for s in states:
        assert abs(s.norm() - 1) < 1e-10
        assert abs(h3.energy(s) - E0) < 1e-10 * max(1, E0)


def test_evolve_composition(h3):
    psi = random_state(3, 12, 2)
    a = evolve(evolve(psi, h3, 0.3), h3, 0.45)
    b = evolve(psi, h3, 0.75)
    assert np.abs(a.amps - b.amps).max() < 1e-9


def test_sparse_route_matches_eigendecomposition(monkeypatch, h3):
    psi = product_state(default_phi(LAT), 3)
    dense = evolve_many(psi, h3, [0.2, 0.5])
    monkeypatch.setattr("nlsderive.manybody.hamiltonian.DENSE_DIM", 10)
    sparse = evolve_many(psi, h3, [0.2, 0.5])
    for a, b in zip(dense, sparse):
        assert np.abs(a.amps - b.amps).max() < 1e-10
    assert DENSE_DIM > 10


# ---- marginals


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 4), st.integers(1, 3))
def test_marginal_properties(seed, N, k):
    k = min(k, N)
    psi = random_state(N, 5, seed)
    g = marginal(psi, k)
    G = g.matrix
    assert abs(g.trace() - 1) < 1e-12
    assert np.abs(G - G.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(G).min() > -1e-12
    if k >= 2:
        perm = [1, 0] + list(range(2, k)) + [k + 1, k] + list(range(k + 2, 2 * k))
        assert np.abs(g.data() - g.data().transpose(perm)).max() < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 4))
def test_partial_trace_chains(seed, N):
    psi = random_state(N, 4, seed)
    for k in range(1, N):
        assert np.abs(marginal(psi, k + 1).partial_trace().matrix - marginal(psi, k).matrix).max() < 1e-12


def test_product_marginal_is_pure():
    phi = default_phi(LAT)
    psi = product_state(phi, 4)
    for k in (1, 2):
        assert np.abs(marginal(psi, k).matrix - pure_density(phi, k).matrix).max() < 1e-13


def test_marginal_range():
    with pytest.raises(ValueError):
        marginal(random_state(2, 4, 0), 3)


def test_evolved_marginals_stay_physical(h3):
    for s in evolve_many(product_state(default_phi(LAT), 3), h3, [0.3, 0.9]):
        for k in (1, 2):
            g = marginal(s, k)
            assert abs(g.trace() - 1) < 1e-12
            assert np.linalg.eigvalsh(g.matrix).min() > -1e-12


# ---- BBGKY


def _trajectory(H, dt, N=3):
    ts = np.arange(9) * dt
    phi = np.exp(1j * LAT.x) * (1 + 0.3 * np.cos(LAT.x))
    return evolve_many(product_state(phi / np.linalg.norm(phi), N), H, ts), ts


def test_bbgky_residual_fourth_order(h3):
    dts = [0.04, 0.02, 0.01]
    res = [bbgky_residual(*_trajectory(h3, dt), h3, 1) for dt in dts]
    assert power_fit(dts, res)[0] == pytest.approx(4.0, abs=0.3)


def test_bbgky_free_is_rounding():
    H = build_hamiltonian(PotentialSpec.with_coupling(0.0, 0.4, 3), LAT)
    for k in (1, 2):
        assert bbgky_residual(*_trajectory(H, 0.05), H, k) < 1e-11


def test_bbgky_top_level_needs_mean_field_factor(h3):
    states, ts = _trajectory(h3, 0.005)
    assert bbgky_residual(states, ts, h3, 2) < 1e-5
    assert bbgky_residual(states, ts, h3, 2, factor=1.0) > 1e-2


def test_bbgky_argument_checks(h3):
    states, ts = _trajectory(h3, 0.01)
    with pytest.raises(ValueError):
        bbgky_residual(states, ts, h3, 3)
    with pytest.raises(ValueError):
        bbgky_residual(states[:4], ts[:4], h3, 1)


# ---- cutoff


def test_cutoff_shape():
    s = np.linspace(-1, 3, 401)
    c = cutoff(s)
    assert (c[s <= 1] == 1).all() and (c[s >= 2] == 0).all()
    assert np.all(np.diff(c) <= 0) and c.min() >= 0


def test_small_kappa_is_identity(h3):
    psi = product_state(default_phi(LAT), 3)
    kappa = 0.9 * 3 / h3.eig[0].max()
    out, dist = regularize_initial(psi, kappa, h3)
    assert dist < 1e-13


def test_cutoff_vanishing_norm(h3):
    psi = product_state(np.exp(6j * LAT.x) / math.sqrt(12), 3)
    with pytest.raises(ValueError):
        regularize_initial(psi, 1e3, h3)


@pytest.mark.parametrize("N", [1, 2])
def test_cutoff_distance_exponent(N):
    lat = Lattice(64, 2 * math.pi / 64)
    H = build_hamiltonian(PotentialSpec.with_coupling(1.0, 0.4, N), lat)
    psi = product_state(tail_state(lat), N)
    kappas = 2.0 ** -np.arange(1, 7)
    d = [regularize_initial(psi, k, H)[1] for k in kappas]
    p, C = power_fit(kappas, d)
    assert p == pytest.approx(0.5, abs=0.1)
    assert C < 1.0


@pytest.mark.parametrize("k", [1, 2])
def test_cutoff_energy_moments(k):
    N = 4
    H = build_hamiltonian(PotentialSpec.with_coupling(1.0, 0.4, N), LAT)
    psi = product_state(default_phi(LAT), N)
    for kappa in (0.5, 0.1, 0.02):
        out, _ = regularize_initial(psi, kappa, H)
        assert H.moment(out, k) <= (2 * N / kappa) ** k


# ---- Sobolev diagnostics


def test_sobolev_trace_of_zero_mode():
    phi = np.ones(LAT.M) / math.sqrt(LAT.M)
    for k in (1, 2):
        assert sobolev_trace(pure_density(phi, k), LAT) == pytest.approx(1.0, abs=1e-12)


def test_sobolev_trace_invariant_under_free_flow():
    H = build_hamiltonian(PotentialSpec.with_coupling(0.0, 0.4, 3), LAT)
    states = evolve_many(product_state(default_phi(LAT), 3), H, [0.0, 0.4, 1.0])
    vals = [sobolev_trace(marginal(s, 2), LAT) for s in states]
    assert np.allclose(vals, vals[0], rtol=1e-10)


def test_sobolev_trace_bounded_for_regularized_data():
    # observed behaviour, not a theorem: stays within a factor two on [0, 1]
    N = 4
    H = build_hamiltonian(PotentialSpec.with_coupling(1.0, 0.4, N), LAT)
    psi, _ = regularize_initial(product_state(default_phi(LAT), N), 0.05, H)
    states = evolve_many(psi, H, np.linspace(0, 1, 6))
    for k in (1, 2):
        vals = [sobolev_trace(marginal(s, k), LAT) for s in states]
        assert max(vals) <= 2 * vals[0]


def test_two_body_operator_bound_uniform_in_n():
    consts, worst = [], []
    for N in (10, 100, 1000, 10000):
        W = PotentialSpec.with_coupling(1.0, 0.4, N).lattice_values(LAT)
        consts.append(sob_constant(W, LAT))
        worst.append(sob_ratios(W, LAT, 1000, seed=N).max())
    C = max(consts)  # b0 = |V|_1 = 1
    assert max(worst) <= C
    assert C <= 1.1 * min(consts)


# ---- mean-field comparison


def test_convergence_trend():
    rows = convergence_study([2, 3, 4, 5, 6], beta=0.4, t=0.5, M=12)
    d = [r.distance for r in rows]
    assert d[-1] < d[0]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_convergence_trivial_cases():
    assert convergence_study([3], t=0.0)[0].distance < 1e-12
    for r in convergence_study([2, 4], t=0.5, b0=0.0):
        assert r.distance < 1e-10


# ---- scattering length


@pytest.mark.parametrize("V0,R", [(1.0, 1.0), (10.0, 2.0), (0.3, 0.5), (50.0, 1.0)])
def test_square_barrier(V0, R):
    res = scattering_length(lambda s: V0, 1, 0.0, R)
    assert res.a == pytest.approx(square_barrier_length(V0, R), abs=1e-8)


def test_zero_potential():
    res = scattering_length(lambda s: 0.0, 5, 0.5)
    assert res.a == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 200.0), st.floats(0.2, 3.0), st.sampled_from([1, 7, 100, 5000]), st.floats(0.0, 0.9))
def test_scattering_bounds_hold(V0, R, N, beta):
    res = scattering_length(radial_bump(V0, R), N, beta, R)
    assert 8 * math.pi * res.a <= res.b0 / N * (1 + 1e-10)
    assert res.a > 0
    assert np.all(res.g >= np.maximum(res.r - res.a, 0) - 1e-10 * R)


def test_scattering_decay_exponent():
    _, errs, slope = decay_study(0.5)
    assert slope == pytest.approx(-0.5, abs=0.1)
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_weak_coupling_scattering_length():
    # 40-digit ODE reference for the rescaled length a_s
    res = scattering_length(radial_bump(0.25, 0.21875), 5000, 0.0625, 0.21875)
    assert res.a * 5000**0.0625 == pytest.approx(4.2518743005221689e-08, rel=1e-10)
    assert res.born_ratio == pytest.approx(1 - 3.1411537708619678e-07, abs=1e-10)


def test_scattering_step_failure():
    with pytest.raises(ScatteringError):
        scattering_length(lambda s: 1e40, 1, 0.0, 1.0)
