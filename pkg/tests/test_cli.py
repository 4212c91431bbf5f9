import csv
import os

import pytest

from spinsqueeze.cli import main
from spinsqueeze.config import parse_config
from spinsqueeze.runner import TRAJECTORY_COLUMNS, run


def _write(tmp_path, text, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


FIG3A = """\
run.mode = simulate-moments
ensemble.n_spins = 1000
dynamics.lambda = 10 MHz
dynamics.big_gamma_m_over_lambda = 0.001
dynamics.gamma_s_over_lambda = 0.01
dynamics.n_th = 1
"""


def test_fig3a_summary(tmp_path):
    out = tmp_path / "out"
    assert main([_write(tmp_path, FIG3A), "--out", str(out), "--svg"]) == 0
    summary = _rows(out / "run_summary.csv")[0]
    assert float(summary["xi2_opt"]) == pytest.approx(0.046, abs=0.010)
    traj = out / "run_trajectory.csv"
    with open(traj) as fh:
        assert fh.readline().strip().split(",") == list(TRAJECTORY_COLUMNS)
    svg = (out / "run_xi2.svg").read_text()
    assert svg.startswith("<svg") and "<polyline" in svg and "xi^2" in svg


def test_budget_report(tmp_path):
    text = "run.mode = budget\nensemble.n_spins = 1000\ndevice.g_single = 3.4 MHz\n"
    out = tmp_path / "b"
    assert main([_write(tmp_path, text), "--out", str(out)]) == 0
    row = _rows(out / "run_budget.csv")[0]
    assert float(row["g_collective_hz"]) == pytest.approx(100e6, rel=0.1)
    assert float(row["lambda_hz"]) == pytest.approx(10e6, rel=0.1)
    assert float(row["big_gamma_m_hz"]) == pytest.approx(10e3, rel=0.1)
    assert float(row["mode_spacing_hz"]) >= 50e6


def test_rate_columns_carry_units(tmp_path):
    cfg = parse_config("run.mode = budget\nensemble.n_spins = 10\n")
    report = run(cfg, out_dir=str(tmp_path))
    for key in report.rows[0]:
        if key.endswith("_hz"):
            assert key[:-3] + "_rad_s" in report.rows[0]


SWEEP = """\
run.mode = sweep
sweep.mode = simulate-exact
sweep.parameter = ensemble.n_spins
sweep.values = 4, 6, 8, 10
ensemble.n_spins = 4
dynamics.lambda = 1 MHz
dynamics.big_gamma_m_over_lambda = 0.001
dynamics.gamma_s_over_lambda = 0.01
dynamics.n_th = 1
dynamics.lambda_t_max = 1.5
dynamics.n_steps = 301
"""


def test_sweep_over_spin_number(tmp_path):
    out = tmp_path / "s"
    assert main([_write(tmp_path, SWEEP), "--out", str(out), "--workers", "2"]) == 0
    trajectories = sorted(p for p in os.listdir(out) if p.endswith("_trajectory.csv"))
    assert len(trajectories) == 4
    rows = _rows(out / "run_sweep_summary.csv")
    xi = [float(r["xi2_opt"]) for r in rows]
    assert [int(r["ensemble.n_spins"]) for r in rows] == [4, 6, 8, 10]
    assert all(a > b for a, b in zip(xi, xi[1:]))


def test_parallel_and_serial_sweeps_are_identical(tmp_path, monkeypatch):
    path = _write(tmp_path, SWEEP)
    assert main([path, "--out", str(tmp_path / "serial"), "--workers", "1"]) == 0
    monkeypatch.setenv("SPINSQUEEZE_WORKERS", "3")
    assert main([path, "--out", str(tmp_path / "parallel")]) == 0
    for name in sorted(os.listdir(tmp_path / "serial")):
        a = (tmp_path / "serial" / name).read_bytes()
        assert a == (tmp_path / "parallel" / name).read_bytes(), name


def test_repeat_runs_are_bitwise_identical(tmp_path):
    path = _write(tmp_path, FIG3A)
    for d in ("one", "two"):
        assert main([path, "--out", str(tmp_path / d)]) == 0
    for name in ("run_summary.csv", "run_trajectory.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_fig3b_table(tmp_path):
    text = "run.mode = analytic\nanalytic.n_list = 100, 1000\nanalytic.eta = 3.4\n"
    assert main([_write(tmp_path, text), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "run_fig3b.csv")
    assert float(rows[0]["xi2_ideal"]) == pytest.approx(0.0482, abs=1e-4)
    assert float(rows[0]["xi2_estimate"]) == pytest.approx(0.1534, abs=1e-4)
    assert float(rows[1]["xi2_ideal"]) == pytest.approx(0.0104, abs=1e-4)
    assert float(rows[1]["xi2_estimate"]) == pytest.approx(0.0485, abs=1e-4)


def test_mode_override(tmp_path):
    out = tmp_path / "m"
    text = FIG3A + "dynamics.n_steps = 50\n"
    assert main([_write(tmp_path, text), "--mode", "budget", "--out", str(out)]) == 0
    assert (out / "run_budget.csv").exists()


def test_config_error_exit_code(tmp_path, capsys):
    assert main([_write(tmp_path, "")]) == 1
    assert "run.mode" in capsys.readouterr().err
    assert main([_write(tmp_path, "run.mode = budget\nensemble.n_spins = -5\n")]) == 1
    assert main([str(tmp_path / "missing.cfg")]) == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a strongly resonant exchange run overflows a one-level phonon cutoff
    text = ("run.mode = simulate-tc\nensemble.n_spins = 2\ndynamics.lambda = 1 MHz\n"
            "dynamics.g_e_over_detuning = 0.5\ndynamics.n_phonon_max = 1\n"
            "dynamics.n_steps = 20\n")
    assert main([_write(tmp_path, text), "--out", str(tmp_path)]) == 2
    assert "TruncationError" in capsys.readouterr().err


def test_tc_mode(tmp_path):
    text = ("run.mode = simulate-tc\nensemble.n_spins = 2\ndynamics.lambda = 1 MHz\n"
            "dynamics.g_e_over_detuning = 0.05\ndynamics.n_steps = 101\n")
    assert main([_write(tmp_path, text), "--out", str(tmp_path)]) == 0
    row = _rows(tmp_path / "run_summary.csv")[0]
    assert float(row["min_fidelity"]) >= 0.99
    assert float(row["excitation_drift"]) < 1e-8
