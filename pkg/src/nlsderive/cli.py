"""Command-line entry point: ``nlsderive <group> <command> [options]``.

Exit codes: 0 when every check in the report passes, 1 when a check fails
or a computation breaks down, 2 for invalid arguments.  Resource caps are
read from NLSDERIVE_CAPS (for example ``n=8,k=4,fock_dim=500000``).
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import caps, graphs, pde
from .report import Report

PRECONDITION_ERRORS = (ValueError, caps.CapExceeded, pde.ConfigError)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise click.BadParameter(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _emit(rep: Report, out: str | None) -> None:
    if out in (None, "", "csv"):
        click.echo(rep.to_csv(), nl=False)
    elif out == "json":
        click.echo(rep.to_json(), nl=False)
    else:
        for p in rep.write(out):
            click.echo(f"wrote {p}", err=True)
    click.echo(f"{rep.command}: {'PASS' if rep.passed else 'FAIL'}", err=True)
    sys.exit(0 if rep.passed else 1)


out_option = click.option(
    "--out", default=None, help="'csv' or 'json' for stdout, or a file path (a .csv/.json mirror is written alongside)."
)
seed_option = click.option("--seed", default=0, show_default=True, type=int, help="RNG seed.")


class _Group(click.Group):
    def main(self, args=None, standalone_mode=True, **extra):
        args = sys.argv[1:] if args is None else list(args)
        try:
            return super().main(args, standalone_mode=False, **extra)
        except click.exceptions.NoArgsIsHelpError as exc:
            click.echo(exc.ctx.get_help() if exc.ctx else str(exc), err=True)
            sys.exit(2)
        except click.UsageError as exc:
            exc.show()
            sys.exit(2)
        except click.exceptions.Abort:
            sys.exit(1)
        except PRECONDITION_ERRORS as exc:
            click.echo(f"error: invalid configuration: {exc}", err=True)
            sys.exit(2)
        except (RuntimeError, ArithmeticError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_Group, no_args_is_help=True)
@click.version_option(package_name="nlsderive")
def main():
    """Numerical checks for the derivation of the cubic NLS from Bose many-body dynamics."""


def _group(name, help_text):
    g = click.Group(name, help=help_text, no_args_is_help=True)
    main.add_command(g)
    return g


graphs_cmd = _group("graphs", "Trees, forests and Feynman graphs.")
amp_cmd = _group("amp", "Graph amplitudes on a momentum lattice.")
scheme_cmd = _group("scheme", "Edge-type integration scheme and inequality validators.")
pde_cmd = _group("pde", "NLS and Hartree solvers.")
mb_cmd = _group("mb", "Exact many-body dynamics and the scattering length.")


# ---- graphs


@graphs_cmd.command("enumerate")
@click.option("--n", required=True, type=click.IntRange(0))
@click.option("--k", required=True, type=click.IntRange(1))
@click.option("--out", default=None, help="JSON file for the graphs (stdout if omitted).")
def graphs_enumerate(n, k, out):
    """Write all Feynman graphs of F_{n,k} as JSON."""
    gs = graphs.enumerate_feynman(n, k)
    text = graphs.graphs_to_json(gs) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {len(gs)} graphs to {out}", err=True)
    else:
        click.echo(text, nl=False)
    ok = len(gs) == graphs.feynman_count_formula(n, k) and len(gs) <= 2 ** (4 * n + k)
    sys.exit(0 if ok else 1)


@graphs_cmd.command("count")
@click.option("--n", required=True, type=click.IntRange(0))
@click.option("--k", required=True, type=click.IntRange(1))
@click.option("--table", is_flag=True, help="All n' <= n and k' <= k instead of the single pair.")
@out_option
def graphs_count(n, k, table, out):
    """Enumerated counts against the closed forms and the 2^{4n+k} bound."""
    rep = Report(
        "graphs count",
        ["n", "k", "forests", "catalan_convolution", "feynman", "ternary_formula", "bound", "ok"],
        params={"n": n, "k": k, "table": table},
    )
    pairs = [(a, b) for b in range(1, k + 1) for a in range(n + 1)] if table else [(n, k)]
    for a, b in pairs:
        forests = len(graphs.enumerate_forests(a, b))
        conv = graphs.forest_count(a, b)
        fey = len(graphs.enumerate_feynman(a, b))
        formula = graphs.feynman_count_formula(a, b)
        bound = 2 ** (4 * a + b)
        ok = forests == conv and fey == formula and fey <= bound
        rep.add(a, b, forests, conv, fey, formula, bound, ok)
        rep.passed &= ok
    _emit(rep, out)


# ---- amplitudes


@amp_cmd.command("verify-fullexp")
@click.option("--n", required=True, type=click.IntRange(0))
@click.option("--k", required=True, type=click.IntRange(1))
@click.option("--t", "ts", default="0.3", show_default=True, help="Comma separated times.")
@click.option("--modes", default=5, show_default=True, type=int)
@click.option("--b0", default=1.0, show_default=True, type=float)
@click.option("--tol", default=1e-4, show_default=True, type=float)
@seed_option
@out_option
def amp_verify_fullexp(n, k, ts, modes, b0, tol, seed, out):
    """Duhamel term against the sum of graph amplitudes."""
    from .amplitudes import MomentumLattice, random_symmetric_kernel, verify_fullexp

    lat = MomentumLattice(modes)
    rep = Report(
        "amp verify-fullexp",
        ["n", "k", "t", "graphs", "max_abs_diff", "max_abs_lhs", "pass"],
        params={"n": n, "k": k, "t": ts, "modes": modes, "b0": b0, "tol": tol},
        seed=seed,
    )
    for t in _floats(ts):
        g0 = random_symmetric_kernel(lat, n + k, np.random.default_rng(seed))
        r, _, _ = verify_fullexp(n, k, t, g0, b0)
        ok = r.max_abs_diff < tol
        rep.add(n, k, t, r.graphs, r.max_abs_diff, r.max_abs_lhs, ok)
        rep.passed &= ok
    _emit(rep, out)


@amp_cmd.command("eta-sweep")
@click.option("--n", required=True, type=click.IntRange(1))
@click.option("--k", required=True, type=click.IntRange(1))
@click.option("--t", default=0.3, show_default=True, type=float)
@click.option("--modes", default=5, show_default=True, type=int)
@click.option("--draws", default=3, show_default=True, type=click.IntRange(1))
@click.option("--tol", default=1e-5, show_default=True, type=float)
@seed_option
@out_option
def amp_eta_sweep(n, k, t, modes, draws, tol, seed, out):
    """Relative change of each graph amplitude under random leaf regulators."""
    from .amplitudes import MomentumLattice, QuadratureSpec, evaluate_K, random_symmetric_kernel

    rng = np.random.default_rng(seed)
    lat = MomentumLattice(modes)
    g0 = random_symmetric_kernel(lat, n + k, rng)
    rep = Report(
        "amp eta-sweep",
        ["graph", "n", "k", "max_rel_dev", "pass"],
        params={"n": n, "k": k, "t": t, "modes": modes, "draws": draws, "tol": tol},
        seed=seed,
    )
    quad = QuadratureSpec(method="quadrature")
    for i, g in enumerate(graphs.enumerate_feynman(n, k)):
        ref = evaluate_K(g, t, g0).data
        scale = float(np.max(np.abs(ref))) or 1.0
        dev = 0.0
        for _ in range(draws):
            eta = {leaf: float(rng.uniform(0.3, 3.0)) for leaf in g.leaves}
            got = evaluate_K(g, t, g0, eta=eta, spec=quad).data
            dev = max(dev, float(np.max(np.abs(got - ref))) / scale)
        rep.add(i, n, k, dev, dev < tol)
        rep.passed &= dev < tol
    _emit(rep, out)


# ---- scheme


@scheme_cmd.command("closure")
@click.option("--n", required=True, type=click.IntRange(0))
@click.option("--k", required=True, type=click.IntRange(1))
@click.option("--lam", default=0.09, show_default=True, type=float)
@click.option("--eps", default=0.04, show_default=True, type=float)
@click.option("--table", is_flag=True, help="All n' <= n and k' <= k.")
@out_option
def scheme_closure(n, k, lam, eps, table, out):
    """Run every integration schedule on every graph."""
    from .scheme.rules import SchemeParams
    from .scheme.schedule import closure

    params = SchemeParams(lam, eps)
    rep = Report(
        "scheme closure",
        ["n", "k", "graphs", "schedules", "failures", "pass"],
        params={"n": n, "k": k, "lam": lam, "eps": eps, "table": table},
    )
    pairs = [(a, b) for b in range(1, k + 1) for a in range(n + 1)] if table else [(n, k)]
    for a, b in pairs:
        r = closure(a, b, params)
        rep.add(a, b, r.graphs, r.schedules, len(r.failures), r.ok)
        rep.passed &= r.ok
    _emit(rep, out)


@scheme_cmd.command("validate")
@click.option("--lemma", "lemmas", multiple=True, required=True, help="Lemma name, repeatable, or 'all'.")
@click.option("--variant", default=None, help="Variant (sign pattern) where the lemma has several.")
@click.option("--samples", default=10_000, show_default=True, type=click.IntRange(1))
@seed_option
@out_option
def scheme_validate(lemmas, variant, samples, seed, out):
    """Empirical max of lhs/rhs and its stability under sample doubling."""
    from .scheme.inequalities import LEMMAS, default_case, validate_inequality

    names = list(LEMMAS) if "all" in lemmas else list(lemmas)
    for name in names:
        if name not in LEMMAS:
            raise click.BadParameter(f"unknown lemma {name!r}; choose from {', '.join(LEMMAS)}", param_hint="--lemma")
    rep = Report(
        "scheme validate",
        ["lemma", "variant", "params", "samples", "max_ratio_half", "max_ratio", "worst_rel_err", "divergent", "pass"],
        params={"lemmas": names, "variant": variant, "samples": samples},
        seed=seed,
    )
    for name in names:
        r = validate_inequality(default_case(name, variant=variant), samples=samples, seed=seed)
        rep.add(
            r.lemma, r.variant, json.dumps(r.params, sort_keys=True), r.samples, r.max_ratio_half, r.max_ratio,
            r.worst_rel_err, r.divergent, r.passed,
        )
        rep.passed &= r.passed
    _emit(rep, out)


# ---- pde


def _preset(name: str, k: int, M: int) -> tuple[pde.Field, callable]:
    if name == "planewave":
        return pde.plane_wave(k, M=M), lambda b0, t: pde.plane_wave_exact(k, b0, t, M=M)
    if name == "gaussian":
        return pde.gaussian(0.5, 1.0, M=M), None
    raise click.BadParameter(f"unknown preset {name!r}")


@pde_cmd.command("nls")
@click.option("--preset", type=click.Choice(["planewave", "gaussian"]), default="planewave", show_default=True)
@click.option("--T", "T", default=1.0, show_default=True, type=float)
@click.option("--b0", default=1.0, show_default=True, type=float)
@click.option("--dt", default=None, type=float, help="Time step (default T/2048).")
@click.option("--mode", "k", default=1, show_default=True, type=int, help="Plane-wave wave number.")
@click.option("--M", "M", default=256, show_default=True, type=int)
@click.option("--samples", default=16, show_default=True, type=click.IntRange(1), help="Report rows.")
@click.option("--report", "out", default=None, help="Report path, or 'csv'/'json' for stdout.")
@click.option("--dump", default=None, help="Write the trajectory as .npz.")
def pde_nls(preset, T, b0, dt, k, M, samples, out, dump):
    """Split-step NLS with mass, energy and (plane wave) exact-solution checks."""
    u0, exact = _preset(preset, k, M)
    cfg = pde.SolverConfig(T=T, dt=dt, b0=b0)
    every = max(1, cfg.n_steps // samples)
    cfg = pde.SolverConfig(T=T, dt=dt, b0=b0, save_every=every)
    traj = pde.solve_nls(u0, cfg)
    if dump:
        traj.save(dump)
    masses, energies = traj.masses(), traj.energies()
    cols = ["t", "mass", "energy", "mass_drift", "energy_drift"] + (["max_err_exact"] if exact else [])
    rep = Report("pde nls", cols, params={"preset": preset, "T": T, "b0": b0, "dt": cfg.step, "mode": k, "M": M})
    for i, t in enumerate(traj.times):
        row = [float(t), float(masses[i]), float(energies[i]), float(abs(masses[i] - masses[0])), float(abs(energies[i] - energies[0]))]
        if exact:
            row.append(float(np.abs(traj.values[i] - exact(b0, float(t))).max()))
        rep.add(*row)
    rep.passed = float(np.abs(masses - masses[0]).max()) < 1e-10
    if exact:
        rep.passed &= rep.rows[-1][-1] < 1e-6
    _emit(rep, out)


@pde_cmd.command("hartree")
@click.option("--width", default=0.2, show_default=True, type=float, help="Width of the Gaussian bump potential.")
@click.option("--T", "T", default=0.5, show_default=True, type=float)
@click.option("--b0", default=1.0, show_default=True, type=float)
@click.option("--M", "M", default=256, show_default=True, type=int)
@click.option("--report", "out", default=None)
def pde_hartree(width, T, b0, M, out):
    """Hartree evolution with a bump of integral b0, compared with NLS."""
    u0 = pde.gaussian(0.5, 1.0, M=M)
    cfg = pde.SolverConfig(T=T, b0=b0, save_every=256)
    h = pde.solve_hartree(u0, pde.gaussian_bump(width, b0), cfg)
    n = pde.solve_nls(u0, cfg)
    rep = Report("pde hartree", ["t", "mass_drift", "energy_drift", "l2_distance_to_nls"], params={"width": width, "T": T, "b0": b0, "M": M})
    m, E = h.masses(), h.energies()
    for i, t in enumerate(h.times):
        d = math.sqrt(float(np.sum(np.abs(h.values[i] - n.values[i]) ** 2)) * u0.h)
        rep.add(float(t), float(abs(m[i] - m[0])), float(abs(E[i] - E[0])), d)
    rep.passed = float(np.abs(m - m[0]).max()) < 1e-10
    _emit(rep, out)


@pde_cmd.command("residual")
@click.option("--k", default=1, show_default=True, type=click.IntRange(1, 2))
@click.option("--T", "T", default=0.5, show_default=True, type=float)
@click.option("--b0", default=1.0, show_default=True, type=float)
@click.option("--steps", default="128,256,512,1024", show_default=True, help="Step counts to refine over.")
@click.option("--min-order", default=1.9, show_default=True, type=float)
@out_option
def pde_residual(k, T, b0, steps, min_order, out):
    """Hierarchy residual of factorized densities under dt refinement."""
    u0 = pde.gaussian(0.5, 1.0)
    rep = Report("pde residual", ["steps", "dt", "residual"], params={"k": k, "T": T, "b0": b0, "steps": steps})
    hs, res = [], []
    for n in _ints(steps):
        traj = pde.solve_nls(u0, pde.SolverConfig(T=T, dt=T / n, b0=b0))
        r = pde.gp_hierarchy_residual(traj, k)
        hs.append(T / n)
        res.append(r)
        rep.add(n, T / n, r)
    order = pde.order_fit(hs, res)
    rep.params["fitted_order"] = order
    rep.passed = order >= min_order
    _emit(rep, out)


# ---- many-body


@mb_cmd.command("converge")
@click.option("--Ns", "Ns", default="2,3,4,5,6", show_default=True)
@click.option("--sites", default=12, show_default=True, type=click.IntRange(2))
@click.option("--beta", default=0.4, show_default=True, type=float)
@click.option("--t", default=0.5, show_default=True, type=float)
@click.option("--b0", default=1.0, show_default=True, type=float)
@out_option
def mb_converge(Ns, sites, beta, t, b0, out):
    """Trace distance of the one-particle marginal to the lattice NLS solution."""
    from .manybody import convergence_study

    Ns = _ints(Ns)
    rows = convergence_study(Ns, beta=beta, t=t, M=sites, b0=b0)
    rep = Report("mb converge", ["N", "dim", "t", "trace_distance"], params={"Ns": Ns, "sites": sites, "beta": beta, "t": t, "b0": b0})
    for r in rows:
        rep.add(r.N, r.dim, r.t, r.distance)
    rep.passed = len(rows) < 2 or rows[-1].distance < rows[0].distance
    _emit(rep, out)


@mb_cmd.command("scatt")
@click.option("--betas", default="0.3,0.5,0.7", show_default=True)
@click.option("--Nmin", "Nmin", default=10.0, show_default=True, type=float)
@click.option("--Nmax", "Nmax", default=1e4, show_default=True, type=float)
@click.option("--V0", "V0", default=1.0, show_default=True, type=float, help="Height of the smooth radial bump.")
@click.option("--R", "R", default=1.0, show_default=True, type=float, help="Support radius.")
@click.option("--tol", default=0.1, show_default=True, type=float, help="Allowed deviation of the fitted exponent from beta - 1.")
@out_option
def mb_scatt(betas, Nmin, Nmax, V0, R, tol, out):
    """Scattering length of (1/N) V_N and the decay of |8 pi N a_N - b0|/b0."""
    from .manybody import radial_bump, scattering_length

    if not 1 <= Nmin < Nmax:
        raise click.BadParameter("need 1 <= Nmin < Nmax")
    Ns = [float(x) for x in np.logspace(math.log10(Nmin), math.log10(Nmax), int(round(math.log10(Nmax / Nmin))) + 1)]
    V = radial_bump(V0, R)
    rep = Report(
        "mb scatt",
        ["beta", "N", "a_N", "born_ratio", "rel_err", "fitted_exponent"],
        params={"betas": betas, "Nmin": Nmin, "Nmax": Nmax, "V0": V0, "R": R, "tol": tol},
    )
    for beta in _floats(betas):
        res = [scattering_length(V, N, beta, R) for N in Ns]
        errs = [abs(r.born_ratio - 1) for r in res]
        slope = float(np.polyfit(np.log(Ns), np.log(errs), 1)[0]) if len(Ns) > 1 else float("nan")
        for N, r, e in zip(Ns, res, errs):
            rep.add(beta, N, r.a, r.born_ratio, e, slope)
        rep.passed &= abs(slope - (beta - 1)) <= tol
    _emit(rep, out)


@mb_cmd.command("cutoff")
@click.option("--N", "N", default=2, show_default=True, type=click.IntRange(1))
@click.option("--sites", default=64, show_default=True, type=click.IntRange(2))
@click.option("--beta", default=0.4, show_default=True, type=float)
@click.option("--b0", default=1.0, show_default=True, type=float)
@click.option("--kappas", default="0.5,0.25,0.125,0.0625,0.03125,0.015625", show_default=True)
@click.option("--decay", default=1.55, show_default=True, type=float, help="Fourier decay of the one-particle state.")
@out_option
def mb_cutoff(N, sites, beta, b0, kappas, decay, out):
    """Distance between a product state and its spectral cutoff chi(kappa H/N)."""
    from .manybody import Lattice, PotentialSpec, build_hamiltonian, power_fit, product_state, regularize_initial, tail_state

    lat = Lattice(sites, 2 * math.pi / sites)
    H = build_hamiltonian(PotentialSpec.with_coupling(b0, beta, N), lat)
    psi = product_state(tail_state(lat, decay), N)
    ks = _floats(kappas)
    rep = Report("mb cutoff", ["kappa", "distance", "energy_per_particle"], params={"N": N, "sites": sites, "beta": beta, "b0": b0, "kappas": kappas, "decay": decay})
    dists = []
    for kappa in ks:
        out_state, d = regularize_initial(psi, kappa, H)
        dists.append(d)
        rep.add(kappa, d, H.energy(out_state) / N)
    p, C = power_fit(ks, dists)
    rep.params.update(fitted_exponent=p, fitted_constant=C)
    rep.passed = abs(p - 0.5) <= 0.1
    _emit(rep, out)


if __name__ == "__main__":
    main()
