import subprocess
import sys

import pytest

from scalecon.cli import COMMANDS, main, selftest_checks
from scalecon.scenario import RESULT_COLUMNS
from scalecon.statics import SWEEP_COLUMNS
from scalecon.steady import STEADY_COLUMNS


def _run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


@pytest.fixture
def bench_cfg(tmp_path):
    path = tmp_path / "bench.cfg"
    path.write_text("# benchmark\nnu = 1.02\nmu = 1.245\n", encoding="utf-8")
    return path


def test_steady_to_file(capsys, tmp_path, bench_cfg):
    out_path = tmp_path / "ss.csv"
    rc, _, _ = _run(capsys, "steady", "--config", str(bench_cfg), "--out", str(out_path))
    assert rc == 0
    header, row = out_path.read_text(encoding="utf-8").strip().split("\n")
    assert header.split(",") == list(STEADY_COLUMNS)
    assert len(row.split(",")) == 17


def test_validate_reports_assumption(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nu = 1.3\nmu = 1.245\n", encoding="utf-8")
    rc, _, err = _run(capsys, "validate", "--config", str(bad))
    assert rc == 2
    assert "Assumption 1" in err
    rc, out, _ = _run(capsys, "validate")
    assert rc == 0 and "hold" in out


def test_exit_codes(capsys, tmp_path):
    assert _run(capsys, "steady", "--bogus")[0] == 64
    assert _run(capsys, "frobnicate")[0] == 64
    assert _run(capsys, "steady", "--config", str(tmp_path / "missing.cfg"))[0] == 4
    assert _run(capsys, "steady", "--set", "theta=4")[0] == 2
    assert _run(capsys, "steady", "--set", "nu")[0] == 2
    assert _run(capsys, "scenario")[0] == 64
    rc, _, err = _run(capsys, "transition", "--k0-ratio", "0.2", "--T", "2", "--tol", "1e-13")
    assert rc == 3 and "solver failure" in err


def test_overrides_apply_after_config(capsys, bench_cfg):
    _, a, _ = _run(capsys, "steady", "--config", str(bench_cfg), "--set", "nu=1.03")
    _, b, _ = _run(capsys, "steady", "--set", "nu=1.03")
    assert a == b


def test_sweep_output_is_independent_of_jobs(capsys):
    args = ("sweep", "--axis", "nu", "--lo", "0.99", "--hi", "1.3", "--n", "15")
    rc, one, err = _run(capsys, *args, "--jobs", "1")
    assert rc == 0
    assert "nu < mu" in err  # the out-of-range points are reported and kept
    _, four, _ = _run(capsys, *args, "--jobs", "4")
    assert one == four
    assert one.splitlines()[0].split(",") == list(SWEEP_COLUMNS)
    assert len(one.splitlines()) == 16


def test_other_subcommands(capsys):
    rc, out, _ = _run(capsys, "transition", "--T", "100")
    assert rc == 0 and out.startswith("t,K,C")
    rc, out, _ = _run(capsys, "transition", "--from", "nu=1.01")
    assert rc == 0
    rc, a, _ = _run(capsys, "firms", "--n", "50", "--seed", "9")
    _, b, _ = _run(capsys, "firms", "--n", "50", "--seed", "9")
    assert rc == 0 and a == b and len(a.splitlines()) == 51
    rc, out, _ = _run(capsys, "costcurves", "--n", "20")
    assert rc == 0 and len(out.splitlines()) == 21
    rc, out, err = _run(capsys, "calibrate")
    assert rc == 0 and "phi =" in out and "kappa/(phi w)" in err
    rc, out, _ = _run(capsys, "scenario", "--mode", "fixed_mu_counterfactual")
    assert rc == 0 and out.splitlines()[0].split(",") == list(RESULT_COLUMNS)


def test_scenario_comparison(capsys, tmp_path):
    a = tmp_path / "a.scn"
    a.write_text("name = nu_mu\nmode = vary_nu_mu\n", encoding="utf-8")
    b = tmp_path / "b.scn"
    b.write_text("name = counterfactual\nmode = fixed_mu_counterfactual\n", encoding="utf-8")
    rc, out, err = _run(capsys, "scenario", str(a), str(b))
    assert rc == 0
    assert out.splitlines()[0] == "year,nu_mu_index,counterfactual_index,counterfactual_minus_nu_mu,tfp_data_index"
    assert "RMSE" in err


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_help_documents_every_subcommand(capsys, command):
    assert main([command, "--help"]) == 0
    out = capsys.readouterr().out
    assert "--out" in out
    schemas = {"steady": STEADY_COLUMNS, "sweep": SWEEP_COLUMNS, "scenario": RESULT_COLUMNS}
    if command in schemas:
        assert ",".join(schemas[command]) in out.replace("\n", "").replace(" ", "")


def test_selftest(capsys):
    assert all(value <= tol for _, value, tol in selftest_checks())
    rc, out, _ = _run(capsys, "selftest")
    assert rc == 0
    assert out.splitlines()[0] == "check,value,tolerance,status"
    assert "FAIL" not in out


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "scalecon", "steady"], capture_output=True, text=True)
    assert done.returncode == 0
    assert done.stdout.splitlines()[0].split(",") == list(STEADY_COLUMNS)
