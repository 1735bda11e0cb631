import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsderive import pde
from nlsderive.pde import ConfigError, Field, SolverConfig


@pytest.fixture(scope="module")
def packet():
    return pde.gaussian(0.5, 1.0)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("b0", [0.0, 1.0, 4.0])
def test_plane_wave_dispersion(k, b0):
    traj = pde.solve_nls(pde.plane_wave(k), SolverConfig(T=1.0, b0=b0))
    assert np.abs(traj.values[-1] - pde.plane_wave_exact(k, b0, 1.0)).max() < 1e-6


def test_free_gaussian_matches_closed_form(packet):
    traj = pde.solve_nls(packet, SolverConfig(T=1.0, b0=0.0))
    assert np.abs(traj.values[-1] - pde.gaussian_free_exact(0.5, 1.0, 1.0)).max() < 1e-6


@pytest.mark.parametrize("b0", [0.5, 1.0, 3.0])
def test_mass_conserved(packet, b0):
    m = pde.solve_nls(packet, SolverConfig(T=1.0, b0=b0, save_every=16)).masses()
    assert np.abs(m - m[0]).max() < 1e-10


def test_energy_conserved_at_fine_step(packet):
    traj = pde.solve_nls(packet, SolverConfig(T=1.0, dt=1 / 16384, b0=1.0, save_every=256))
    E = traj.energies()
    assert np.abs(E - E[0]).max() / E[0] < 1e-8


def test_energy_drift_is_second_order(packet):
    drifts = []
    for n in (512, 1024, 2048):
        E = pde.solve_nls(packet, SolverConfig(T=1.0, dt=1 / n, b0=1.0, save_every=16)).energies()
        drifts.append(np.abs(E - E[0]).max())
    assert pde.order_fit([1 / 512, 1 / 1024, 1 / 2048], drifts) == pytest.approx(2.0, abs=0.1)


def test_energy_of_plane_wave():
    u = pde.plane_wave(2)
    assert pde.energy(u, 3.0) == pytest.approx(4.0 + 1.5 / (2 * math.pi), rel=1e-12)


def test_h1_bound_along_trajectory(packet):
    b0 = 2.0
    traj = pde.solve_nls(packet, SolverConfig(T=1.0, b0=b0, save_every=32))
    bound = pde.h1_bound(packet, b0)
    assert max(pde.h1_norm(traj.field(i)) for i in range(len(traj))) <= 2 * bound


def test_time_reversible(packet):
    fwd = pde.solve_nls(packet, SolverConfig(T=1.0, b0=1.0, save_every=2048))
    back = pde.solve_nls(fwd.field(-1), SolverConfig(T=-1.0, b0=1.0, save_every=2048))
    assert np.abs(back.values[-1] - packet.values).max() < 1e-7
    assert back.times[-1] == pytest.approx(-1.0)


def test_two_dimensional_plane_wave():
    M, L = 32, 2 * math.pi
    x = np.arange(M) * L / M
    X, Y = np.meshgrid(x, x, indexing="ij")
    u = Field(np.exp(1j * (X + 2 * Y)) / L, L)
    traj = pde.solve_nls(u, SolverConfig(T=0.5, b0=2.0))
    omega = 5 + 2.0 / L**2
    assert np.abs(traj.values[-1] - u.values * np.exp(-1j * omega * 0.5)).max() < 1e-10


# ---- preconditions


def test_requires_unit_norm():
    u = Field(2 * pde.plane_wave(1).values)
    with pytest.raises(ConfigError):
        pde.solve_nls(u, SolverConfig())
    pde.solve_nls(u, SolverConfig(T=0.01), normalized=False)


def test_requires_resolved_data():
    x = np.arange(64) * 2 * np.pi / 64
    with pytest.raises(ConfigError):
        pde.solve_nls(Field(np.sign(np.sin(x)) / math.sqrt(2 * math.pi)).normalized(), SolverConfig())


def test_phase_limit(packet):
    with pytest.raises(ConfigError):
        pde.solve_nls(pde.plane_wave(20), SolverConfig(T=1.0, dt=0.01))
    with pytest.raises(ConfigError):
        pde.solve_nls(packet, SolverConfig(T=1.0, dt=0.5, b0=20.0))


@pytest.mark.parametrize("kw", [dict(order=4), dict(b0=-1.0), dict(dt=-0.1), dict(save_every=0)])
def test_bad_configs(kw):
    with pytest.raises(ConfigError):
        SolverConfig(**kw)


def test_field_validation():
    with pytest.raises(ConfigError):
        Field(np.zeros((4, 5)))
    with pytest.raises(ConfigError):
        Field([np.nan, 1.0])
    with pytest.raises(ConfigError):
        Field([1.0, 1.0], L=0.0)


# ---- Hartree


def test_hartree_zero_potential_is_free(packet):
    h = pde.solve_hartree(packet, lambda x: 0 * x, SolverConfig(T=0.5))
    f = pde.solve_nls(packet, SolverConfig(T=0.5, b0=0.0))
    assert np.abs(h.values - f.values).max() < 1e-14


def test_hartree_approaches_nls(packet):
    ref = pde.solve_nls(packet, SolverConfig(T=0.5, b0=1.0)).values[-1]
    dists = []
    for w in (0.4, 0.2, 0.1):
        traj = pde.solve_hartree(packet, pde.gaussian_bump(w, 1.0), SolverConfig(T=0.5, b0=1.0, save_every=64))
        m = traj.masses()
        assert np.abs(m - m[0]).max() < 1e-10
        dists.append(math.sqrt(np.sum(np.abs(traj.values[-1] - ref) ** 2) * packet.h))
    assert dists[0] > dists[1] > dists[2]


def test_hartree_with_constant_potential_is_a_phase(packet):
    # V = c gives V * |u|^2 = c ||u||^2, a global phase rotation
    c = 0.7
    h = pde.solve_hartree(packet, np.full(packet.M, c), SolverConfig(T=0.3))
    f = pde.solve_nls(packet, SolverConfig(T=0.3, b0=0.0))
    assert np.abs(h.values[-1] - f.values[-1] * np.exp(-1j * c * 0.3)).max() < 1e-12


def test_hartree_energy_conserved(packet):
    traj = pde.solve_hartree(packet, pde.gaussian_bump(0.3, 1.0), SolverConfig(T=0.5, dt=1 / 8192, save_every=512))
    E = traj.energies()
    assert np.abs(E - E[0]).max() / E[0] < 1e-8


def test_sampled_potential_shape():
    with pytest.raises(ConfigError):
        pde.sample_potential(np.zeros(5), 8, 1.0)
    v = pde.sample_potential(lambda x: x, 8, 8.0)
    assert list(v) == [0, 1, 2, 3, -4, -3, -2, -1]


# ---- factorized densities and the hierarchy


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_factorized_density_properties(seed, k):
    rng = np.random.default_rng(seed)
    M = 4 if k == 3 else 6
    u = Field(rng.normal(size=M) + 1j * rng.normal(size=M)).normalized()
    g = pde.factorized_density(u, k)
    assert g.trace() == pytest.approx(1.0, abs=1e-12)
    mat = g.matrix()
    assert np.trace(mat).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(mat, mat.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(mat).min() >= -1e-12
    data = g.data()
    if k >= 2:
        perm = [1, 0] + list(range(2, k)) + [k + 1, k] + list(range(k + 2, 2 * k))
        assert np.allclose(data.transpose(perm), data)


def test_factorized_trace_scales_with_norm():
    u = Field(2 * pde.plane_wave(1, M=16).values)
    assert pde.factorized_density(u, 2).trace() == pytest.approx(16.0)
    with pytest.raises(ValueError):
        pde.factorized_density(u, 0)


@pytest.mark.parametrize("k", [1, 2])
def test_hierarchy_residual_second_order(packet, k):
    hs, res = [], []
    for n in (128, 256, 512, 1024):
        traj = pde.solve_nls(packet, SolverConfig(T=0.5, dt=0.5 / n, b0=1.0))
        hs.append(0.5 / n)
        res.append(pde.gp_hierarchy_residual(traj, k))
    assert pde.order_fit(hs, res) >= 1.9


@pytest.mark.parametrize("k", [1, 2])
def test_hierarchy_residual_free_is_rounding(packet, k):
    traj = pde.solve_nls(packet, SolverConfig(T=0.5, b0=0.0))
    assert pde.gp_hierarchy_residual(traj, k) < 1e-10


def test_hierarchy_residual_needs_consistent_coupling(packet):
    traj = pde.solve_nls(packet, SolverConfig(T=0.25, b0=1.0))
    assert pde.gp_hierarchy_residual(traj, 1) < 1e-4
    assert pde.gp_hierarchy_residual(traj, 1, b0=2.0) > 1e-2


@pytest.mark.parametrize("k", [1, 2])
def test_hierarchy_residual_two_routes_agree(k):
    M, L = 12, 2 * math.pi
    x = np.arange(M) * L / M
    u = Field(0.8 + 0.5 * np.exp(1j * x) + 0.3j * np.exp(-2j * x), L).normalized()
    traj = pde.solve_nls(u, SolverConfig(T=0.2, dt=0.2 / 64, b0=2.0))
    sel = slice(0, None, 20)
    fast = pde.gp_hierarchy_residual(traj, k, times=sel)
    slow = pde.gp_hierarchy_residual_explicit(traj, k, times=sel)
    assert fast == pytest.approx(slow, rel=1e-3)
    assert fast > 1e-7


def test_hierarchy_residual_argument_checks(packet):
    traj = pde.solve_nls(packet, SolverConfig(T=0.01, dt=0.005))
    with pytest.raises(ValueError):
        pde.gp_hierarchy_residual(traj, 1)
    traj = pde.solve_nls(packet, SolverConfig(T=0.1))
    with pytest.raises(ValueError):
        pde.gp_hierarchy_residual(traj, 3)


def test_trajectory_round_trip(tmp_path, packet):
    traj = pde.solve_hartree(packet, pde.gaussian_bump(0.3), SolverConfig(T=0.05, save_every=16))
    path = tmp_path / "traj.npz"
    traj.save(path)
    back = pde.Trajectory.load(path)
    assert np.array_equal(back.values, traj.values) and np.array_equal(back.times, traj.times)
    assert back.header() == traj.header()
    assert np.array_equal(back.potential, traj.potential)


def test_lattice_kinetic_matches_matrix_exponential():
    from scipy.linalg import expm

    M, L = 16, 2 * math.pi
    h = L / M
    x = np.arange(M) * h
    u = Field(np.exp(1j * x) * (1 + 0.4 * np.cos(2 * x)), L).normalized()
    T = (2 * np.eye(M) - np.roll(np.eye(M), 1, 0) - np.roll(np.eye(M), -1, 0)) / h**2
    traj = pde.solve_nls(u, SolverConfig(T=0.7, b0=0.0, kinetic="lattice"))
    assert np.abs(traj.values[-1] - expm(-0.7j * T) @ u.values).max() < 1e-12
    with pytest.raises(ConfigError):
        SolverConfig(kinetic="other")
