import json

import pytest
from click.testing import CliRunner

from nlsderive.cli import main
from nlsderive.report import Report


@pytest.fixture
def run():
    runner = CliRunner()

    def _run(*args, env=None):
        return runner.invoke(main, list(args), env=env)

    return _run


def test_empty_invocation_is_usage_error(run):
    res = run()
    assert res.exit_code == 2
    assert "Usage" in res.output


def test_unknown_command(run):
    assert run("nope").exit_code == 2


def test_graphs_count_matches_enumeration(run):
    res = run("graphs", "count", "--n", "5", "--k", "2", "--out", "json")
    assert res.exit_code == 0
    doc = json.loads(res.stdout)
    row = dict(zip(doc["columns"], doc["rows"][0]))
    assert row["forests"] == row["catalan_convolution"] == 132
    assert row["feynman"] == row["ternary_formula"]
    assert doc["passed"] is True


def test_graphs_enumerate_writes_json(run, tmp_path):
    path = tmp_path / "g.json"
    assert run("graphs", "enumerate", "--n", "1", "--k", "1", "--out", str(path)).exit_code == 0
    data = json.loads(path.read_text())
    assert len(data) == 2 and {"n", "k", "vertices", "edges"} <= set(data[0])


def test_cap_override_from_environment(run):
    res = run("graphs", "count", "--n", "3", "--k", "1", env={"NLSDERIVE_CAPS": "n=2"})
    assert res.exit_code == 2
    assert "cap" in res.output


def test_verify_fullexp_passes(run):
    res = run("amp", "verify-fullexp", "--n", "1", "--k", "1", "--modes", "5", "--t", "0.3")
    assert res.exit_code == 0
    rep = Report.from_csv(res.stdout)
    assert rep.rows[0][rep.columns.index("max_abs_diff")] < 1e-4


def test_eta_sweep(run):
    res = run("amp", "eta-sweep", "--n", "1", "--k", "1", "--draws", "2", "--out", "json")
    assert res.exit_code == 0
    assert all(r[-1] for r in json.loads(res.stdout)["rows"])


def test_scheme_commands(run):
    assert run("scheme", "closure", "--n", "2", "--k", "1").exit_code == 0
    res = run("scheme", "validate", "--lemma", "ab", "--samples", "200")
    assert res.exit_code == 0
    assert run("scheme", "validate", "--lemma", "nope").exit_code == 2


def test_pde_commands(run, tmp_path):
    res = run("pde", "nls", "--preset", "planewave", "--T", "1", "--b0", "1", "--report", str(tmp_path / "nls.csv"), "--dump", str(tmp_path / "t.npz"))
    assert res.exit_code == 0
    assert (tmp_path / "nls.csv").exists() and (tmp_path / "nls.json").exists() and (tmp_path / "t.npz").exists()
    assert run("pde", "hartree", "--T", "0.1", "--M", "128").exit_code == 0
    assert run("pde", "residual", "--k", "1", "--steps", "128,256,512").exit_code == 0
    assert run("pde", "nls", "--dt", "-1").exit_code == 2


def test_pde_failure_exit_code(run):
    # an impossible order requirement turns the residual check into a failure
    assert run("pde", "residual", "--steps", "128,256", "--min-order", "5").exit_code == 1


def test_mb_commands(run):
    res = run("mb", "converge", "--Ns", "2,3,4,5,6", "--sites", "12", "--beta", "0.4", "--t", "0.5", "--out", "csv")
    assert res.exit_code == 0
    rep = Report.from_csv(res.stdout)
    d = [r[rep.columns.index("trace_distance")] for r in rep.rows]
    assert d[-1] < d[0]
    assert run("mb", "scatt", "--betas", "0.3,0.5,0.7", "--Nmax", "1e4").exit_code == 0
    assert run("mb", "cutoff", "--N", "1").exit_code == 0
    assert run("mb", "converge", "--beta", "1.5").exit_code == 2
    assert run("mb", "scatt", "--Nmin", "100", "--Nmax", "10").exit_code == 2


def test_reports_are_deterministic(run, tmp_path):
    a = run("amp", "verify-fullexp", "--n", "1", "--k", "1", "--seed", "7").stdout
    b = run("amp", "verify-fullexp", "--n", "1", "--k", "1", "--seed", "7").stdout
    assert a == b and "# seed: 7" in a
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run("mb", "scatt", "--out", str(p1))
    run("mb", "scatt", "--out", str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.with_suffix(".json").read_bytes() == p2.with_suffix(".json").read_bytes()


def test_report_round_trip(tmp_path):
    rep = Report("x y", ["a", "b", "c", "d"], params={"p": [1, 2], "q": 0.1}, seed=3, passed=False)
    rep.add(1, 0.1 + 0.2, "name", True)
    rep.add(-2, 1e-300, "other", False)
    paths = rep.write(tmp_path / "r.csv")
    from_csv = Report.from_csv(paths[0].read_text())
    from_json = Report.from_json(paths[1].read_text())
    assert from_csv == rep == from_json


def test_report_row_width():
    with pytest.raises(ValueError):
        Report("x", ["a"]).add(1, 2)
