"""Config-driven pipelines: budget reports, simulations, sweeps and tables.

Every run writes CSV files whose headers carry the unit (``_s``, ``_hz``,
``_rad_s``); a rate appears once in Hz and once in rad/s, never mixed in a
column. Floats are written with 17 significant digits so identical inputs
give byte-identical files. Wall time is reported but never written.
"""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .dicke import MeanSpinError, align_mean_spin_x, build_dicke_operators, coherent_spin_state_x
from .integrator import IntegrationError
from .lindblad import (TruncationError, evolve_lindblad, evolve_tavis_cummings, fidelity,
                       make_oat_spec, observable_operators)
from .moments import MomentParams, evolve_moments
from .siv import SiVParams, closed_form_energies
from .squeezing import (fig3b_rows, ideal_optimum, moments_from_density, squeezing_trace,
                        trace_from_expectations, trace_from_moments, xi_squared)
from .svg import log_line_plot
from .units import rad_to_hz
from .waveguide import RegimeWarning, compression_mode_spectrum, zero_point_amplitude

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL_ERRORS = (IntegrationError, TruncationError, MeanSpinError, FloatingPointError,
                    np.linalg.LinAlgError)
TRAJECTORY_COLUMNS = ("t_s", "jx", "jy", "jz", "jy2", "jz2", "jyz", "xi2", "alpha_min_rad")


@dataclass
class RunReport:
    mode: str
    parameters: dict  # name (with unit suffix) -> value
    files: list = field(default_factory=list)
    t_opt: float | None = None  # seconds
    xi2_opt: float | None = None
    warnings: list = field(default_factory=list)
    wall_time: float = 0.0
    exit_code: int = EXIT_OK
    error: str | None = None
    rows: list = field(default_factory=list)  # summary rows

    def render(self) -> str:
        lines = [f"mode: {self.mode}"]
        lines += [f"  {k} = {_fmt(v)}" for k, v in self.parameters.items()]
        if self.xi2_opt is not None:
            lines.append(f"optimum: xi2_opt = {self.xi2_opt:.6g} at t_opt_s = {self.t_opt:.6g}")
        lines += [f"wrote {p}" for p in self.files]
        lines += [f"warning: {w}" for w in self.warnings]
        if self.error:
            lines.append(f"error: {self.error}")
        lines.append(f"wall_time_s = {self.wall_time:.3f}")
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: str, header, rows) -> str:
    """Write atomically: a temporary file in the target directory is renamed into place."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())
    return path


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rate_columns(name: str, omega: float) -> dict:
    return {f"{name}_rad_s": float(omega), f"{name}_hz": rad_to_hz(float(omega))}


def write_summary(path: str, rows: list[dict]) -> str:
    header = list(rows[0])
    for row in rows[1:]:
        header += [k for k in row if k not in header]
    return write_csv(path, header, [[row.get(k, "") for k in header] for row in rows])


# single-run pipelines -----------------------------------------------------------

@dataclass
class EntryResult:
    row: dict
    files: list
    warnings: list
    series: tuple | None = None  # (label, t, xi2) for plotting
    error: str | None = None


def _trajectory_rows(trace, moments):
    for point, m in zip(trace.points, moments):
        yield (point.time, m.jx, m.jy, m.jz, m.jy2, m.jz2, m.jyz, point.xi2, point.alpha_min)


def _dynamics_row(cfg: ScenarioConfig) -> dict:
    d = cfg.dynamics
    row = {"n_spins": d.n_spins}
    row.update(_rate_columns("lambda", d.lambda_twist))
    row.update(_rate_columns("gamma_s", d.gamma_s))
    row.update(_rate_columns("big_gamma_m", d.big_gamma_m))
    row["n_th"] = d.n_th
    row["t_max_s"] = d.times[-1]
    row["n_times"] = len(d.times)
    row["rtol"], row["atol"] = d.rtol, d.atol
    return row


def _optimum_columns(trace, lam: float, n_spins: int) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        t_ideal, xi_ideal = ideal_optimum(n_spins / 2, abs(lam))
    return {
        "t_opt_s": trace.refined.t_opt,
        "xi2_opt": trace.refined.xi2_opt,
        "t_opt_grid_s": trace.t_opt,
        "xi2_opt_grid": trace.xi2_opt,
        "optimum_interior": trace.refined.interior,
        "lambda_t_opt": abs(lam) * trace.refined.t_opt,
        "t_min_ideal_s": t_ideal,
        "xi2_ideal": xi_ideal,
    }


def simulate_entry(cfg: ScenarioConfig, run_mode: str, path_stem: str) -> EntryResult:
    """Run one simulation and write its trajectory CSV; errors are captured."""
    d = cfg.dynamics
    row = {"mode": run_mode, **_dynamics_row(cfg)}
    notes: list[str] = []
    files: list[str] = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            times = np.asarray(d.times)
            if run_mode == "simulate-moments":
                params = MomentParams(d.n_spins / 2, d.lambda_twist, d.gamma_s,
                                      d.big_gamma_m, d.n_th)
                traj = evolve_moments(params, times, rtol=d.rtol, atol=d.atol, method=d.method)
                trace = trace_from_moments(traj, d.n_spins, d.variance_mode)
                moments = list(traj)
                notes.extend(traj.warnings)
                row["integrator_steps"] = traj.n_steps
            elif run_mode == "simulate-exact":
                ops = build_dicke_operators(d.n_spins)
                spec = make_oat_spec(n_spins=d.n_spins, lambda_twist=d.lambda_twist,
                                     gamma_s=d.gamma_s, big_gamma_m=d.big_gamma_m, n_th=d.n_th,
                                     include_linear=d.include_linear, detuning=d.detuning, ops=ops)
                traj = evolve_lindblad(spec, coherent_spin_state_x(d.n_spins), times,
                                       rtol=d.rtol, atol=d.atol, method=d.method,
                                       store_states=False, observables=observable_operators(ops))
                trace, moments = trace_from_expectations(times, traj.expectations, d.n_spins,
                                                         d.variance_mode)
                notes.extend(traj.warnings)
                row.update(integrator_steps=traj.n_steps,
                           trace_drift=float(np.max(traj.trace_drift)),
                           hermiticity_error=float(np.max(traj.hermiticity_error)),
                           min_eigenvalue=float(np.min(traj.min_eigenvalue)))
            else:
                trace, moments, tc_row, tc_file = _simulate_tc(cfg, times, path_stem, notes)
                row.update(tc_row)
                files.append(tc_file)
        notes.extend(f"{w.category.__name__}: {w.message}" for w in caught)
    except NUMERICAL_ERRORS as exc:
        return EntryResult(row, files, notes, None, f"{type(exc).__name__}: {exc}")
    row.update(_optimum_columns(trace, d.lambda_twist, d.n_spins))
    files.insert(0, write_csv(f"{path_stem}_trajectory.csv", TRAJECTORY_COLUMNS,
                              _trajectory_rows(trace, moments)))
    label = f"N = {d.n_spins}"
    return EntryResult(row, files, notes, (label, trace.times, trace.xi2))


def _simulate_tc(cfg: ScenarioConfig, times, path_stem: str, notes: list):
    d = cfg.dynamics
    ratio = d.g_e_over_detuning
    g_e = abs(d.lambda_twist) / ratio
    detuning = g_e / ratio
    lam = g_e**2 / detuning
    ops = build_dicke_operators(d.n_spins)
    css = coherent_spin_state_x(d.n_spins)
    res = evolve_tavis_cummings(d.n_spins, g_e, detuning, d.n_phonon_max, css, None, times,
                                rtol=d.rtol, atol=d.atol, method=d.method)
    oat = evolve_lindblad(make_oat_spec(n_spins=d.n_spins, lambda_twist=lam, ops=ops), css,
                          times, rtol=d.rtol, atol=d.atol, method=d.method)
    notes.extend(res.spin.warnings + res.joint.warnings + oat.warnings)
    fid, moments, points = [], [], []
    for k, t in enumerate(times):
        rho_tc, _ = align_mean_spin_x(res.spin.states[k], ops)
        rho_oat, _ = align_mean_spin_x(oat.states[k], ops)
        fid.append(fidelity(rho_tc, rho_oat))
        m = moments_from_density(rho_tc, ops, realign=False)
        moments.append(m)
        points.append(xi_squared(m, d.n_spins, float(t), d.variance_mode))
    tc_file = write_csv(f"{path_stem}_tc.csv",
                        ("t_s", "fidelity", "phonon_number", "excitation_number"),
                        zip(times, fid, res.phonon_number, res.excitation_number))
    row = {"g_e_over_detuning": ratio, **_rate_columns("g_e", g_e),
           **_rate_columns("detuning", detuning), "n_phonon_max": d.n_phonon_max,
           "min_fidelity": min(fid),
           "top_level_population": float(np.max(res.top_level_population)),
           "excitation_drift": float(np.ptp(res.excitation_number))}
    return squeezing_trace(points), moments, row, tc_file


def _sweep_entry(args):
    cfg, run_mode, stem = args
    return simulate_entry(cfg, run_mode, stem)


# mode dispatch ---------------------------------------------------------------------

def budget_report(cfg: ScenarioConfig) -> dict:
    dev, b = cfg.device, cfg.budget
    spectrum = compression_mode_spectrum(dev.guide, 3)
    siv = SiVParams(lambda_so=dev.lambda_so, upsilon_x=dev.upsilon_x, upsilon_y=dev.upsilon_y,
                    b_z=dev.b_z)
    row = {"n_spins": b.n_spins, "detuning_ratio": b.detuning_ratio}
    row.update(_rate_columns("g_single_geometry", dev.g_single_derived))
    row.update(_rate_columns("g_single", b.g_single))
    row.update(_rate_columns("g_collective", b.g_collective))
    row.update(_rate_columns("detuning", b.detuning))
    row.update(_rate_columns("lambda", b.lambda_twist))
    row.update(_rate_columns("gamma_m", b.gamma_m))
    row.update(_rate_columns("gamma_s", b.gamma_s_dephase))
    row.update(_rate_columns("big_gamma_m", b.big_gamma_m))
    row.update(_rate_columns("omega_m", dev.omega_m))
    row["temperature_k"] = dev.temperature
    row["n_th"] = b.n_th
    try:
        row["eta"] = b.eta
    except ValueError:
        row["eta"] = math.inf
    row["longitudinal_velocity_m_s"] = dev.guide.longitudinal_velocity
    row.update(_rate_columns("mode_spacing", spectrum.spacing))
    row["modes_well_separated"] = spectrum.well_separated
    row["zero_point_amplitude_m"] = zero_point_amplitude(dev.omega_m, dev.guide.mass)
    row.update(_rate_columns("siv_splitting", siv.d_splitting))
    for label, energy in zip("abcd", closed_form_energies(siv)):
        row.update(_rate_columns(f"siv_energy_{label}", energy))
    return row


def run(cfg: ScenarioConfig, out_dir: str | None = None, workers: int | None = None,
        svg: bool | None = None) -> RunReport:
    """Execute the configured scenario and write its files under ``out_dir``."""
    start = time.perf_counter()
    out_dir = out_dir or cfg.output_dir
    svg = cfg.values["output.svg"] if svg is None else svg
    workers = workers or cfg.values["sweep.workers"]
    stem = os.path.join(out_dir, cfg.values["output.prefix"])
    report = RunReport(cfg.mode, {}, warnings=list(cfg.warnings))
    mode = cfg.mode

    if mode == "budget":
        row = budget_report(cfg)
        report.parameters = row
        report.rows = [row]
        report.files.append(write_summary(f"{stem}_budget.csv", [row]))
    elif mode == "analytic":
        rows = fig3b_rows(cfg.values["analytic.n_list"], cfg.values["analytic.eta"])
        report.parameters = {"eta": cfg.values["analytic.eta"]}
        report.rows = [{"n_spins": n, "xi2_ideal": a, "xi2_estimate": e} for n, a, e in rows]
        report.files.append(write_csv(f"{stem}_fig3b.csv", ("n_spins", "xi2_ideal",
                                                             "xi2_estimate"), rows))
        if svg:
            n = [r[0] for r in rows]
            doc = log_line_plot([("ideal twisting", n, [r[1] for r in rows]),
                                 ("dissipative estimate", n, [r[2] for r in rows])],
                                "spin number N", "optimal xi^2")
            report.files.append(_write_svg(f"{stem}_fig3b.svg", doc))
    elif mode == "sweep":
        _run_sweep(cfg, stem, workers, svg, report)
    else:
        result = simulate_entry(cfg, mode, stem)
        _absorb(report, result)
        report.parameters = {k: v for k, v in result.row.items()}
        if result.error is None:
            report.t_opt, report.xi2_opt = result.row["t_opt_s"], result.row["xi2_opt"]
            report.files.append(write_summary(f"{stem}_summary.csv", [result.row]))
            if svg:
                doc = log_line_plot([result.series], "t (s)", "xi^2")
                report.files.append(_write_svg(f"{stem}_xi2.svg", doc))
    report.wall_time = time.perf_counter() - start
    return report


def _absorb(report: RunReport, result: EntryResult) -> None:
    report.files.extend(result.files)
    report.warnings.extend(result.warnings)
    report.rows.append(result.row)
    if result.error is not None:
        report.exit_code = EXIT_NUMERICAL
        report.error = result.error if report.error is None else f"{report.error}; {result.error}"


def _sweep_value(key: str, value: float):
    return int(value) if key == "ensemble.n_spins" else float(value)


def _run_sweep(cfg: ScenarioConfig, stem: str, workers: int, svg: bool,
               report: RunReport) -> None:
    key = cfg.values["sweep.parameter"]
    run_mode = cfg.values["sweep.mode"]
    overrides = {"run.mode": run_mode}
    jobs = []
    for i, value in enumerate(cfg.values["sweep.values"]):
        entry = cfg.with_values({**overrides, key: _sweep_value(key, value)})
        report.warnings.extend(w for w in entry.warnings if w not in report.warnings)
        jobs.append((entry, run_mode, f"{stem}_{i:03d}"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_sweep_entry, jobs))
    else:
        results = [_sweep_entry(job) for job in jobs]
    rows = []
    for (entry, _, _), value, result in zip(jobs, cfg.values["sweep.values"], results):
        _absorb(report, result)
        rows.append({key: _sweep_value(key, value), **result.row,
                     "error": result.error or ""})
    report.rows = rows
    report.parameters = {"sweep_parameter": key, "sweep_mode": run_mode,
                         "entries": len(jobs), "workers": workers}
    report.files.append(write_summary(f"{stem}_sweep_summary.csv", rows))
    if svg:
        series = [(f"{key.split('.')[-1]} = {_fmt(_sweep_value(key, v))}", *r.series[1:])
                  for v, r in zip(cfg.values["sweep.values"], results) if r.series]
        if series:
            report.files.append(_write_svg(f"{stem}_sweep_xi2.svg",
                                           log_line_plot(series, "t (s)", "xi^2")))
    ok = [r for r in rows if not r["error"]]
    if ok:
        best = min(ok, key=lambda r: r["xi2_opt"])
        report.t_opt, report.xi2_opt = best["t_opt_s"], best["xi2_opt"]


def _write_svg(path: str, doc: str) -> str:
    _atomic_write(path, doc)
    return path

