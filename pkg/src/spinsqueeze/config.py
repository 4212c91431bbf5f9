"""Scenario configuration files.

The format is flat text with one ``section.key = value`` per line and ``#``
comments. Quantities take unit suffixes (``10 MHz``, ``100 mK``, ``20 um``).
Frequencies in files are plain Hz; parsed configs hold rad/s.

Only ``run.mode`` is always required; each mode adds its own required keys
(see ``MODE_REQUIREMENTS``). Rates for the dynamics may be absolute
(``dynamics.gamma_s = 0.1 MHz``) or relative to the twisting strength
(``dynamics.gamma_s_over_lambda = 0.01``); the ratio wins when both appear.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping

from . import constants
from .units import UnitError, hz_to_rad, parse_quantity, read_flat
from .waveguide import CouplingBudget, RegimeWarning, WaveguideSpec, guide_coupling, make_budget

MODES = ("budget", "simulate-exact", "simulate-moments", "simulate-tc", "analytic", "sweep")
SIM_MODES = ("simulate-exact", "simulate-moments", "simulate-tc")
METHODS = ("DOP853", "RK45")

_REQUIRED = object()


class ConfigError(ValueError):
    """Invalid scenario file; ``line`` is the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class _Key:
    kind: str  # "quantity", "int", "float", "bool", "str", "floats", "ints"
    default: Any = None  # in internal units (rad/s for frequencies)
    unit: str | None = None  # quantity kind for parse_quantity
    choices: tuple = ()


_KEYS: dict[str, _Key] = {
    "run.mode": _Key("str", _REQUIRED, choices=MODES),
    # device
    "device.length": _Key("quantity", constants.REFERENCE_GUIDE[0], "length"),
    "device.width": _Key("quantity", constants.REFERENCE_GUIDE[1], "length"),
    "device.thickness": _Key("quantity", constants.REFERENCE_GUIDE[2], "length"),
    "device.youngs_modulus": _Key("quantity", constants.DIAMOND_YOUNGS, "pressure"),
    "device.poisson_ratio": _Key("float", constants.DIAMOND_POISSON),
    "device.density": _Key("quantity", constants.DIAMOND_DENSITY, "density"),
    "device.strain_d": _Key("quantity", constants.MATERIALS["siv.strain_susceptibility_d"],
                            "strain_susceptibility"),
    "device.omega_m": _Key("quantity", hz_to_rad(46e9), "frequency"),
    "device.temperature": _Key("quantity", 0.1, "temperature"),
    "device.q_factor": _Key("float", None),
    "device.gamma_m": _Key("quantity", hz_to_rad(1e6), "frequency"),
    "device.gamma_s": _Key("quantity", hz_to_rad(0.1e6), "frequency"),
    "device.g_single": _Key("quantity", None, "frequency"),
    "device.lambda_so": _Key("quantity", constants.LAMBDA_SO, "frequency"),
    "device.upsilon_x": _Key("quantity", 0.0, "frequency"),
    "device.upsilon_y": _Key("quantity", 0.0, "frequency"),
    "device.b_z": _Key("quantity", 0.0, "field"),
    # ensemble
    "ensemble.n_spins": _Key("int", None),
    "ensemble.detuning_ratio": _Key("float", 10.0),
    # dynamics
    "dynamics.t_max": _Key("quantity", None, "time"),
    "dynamics.lambda_t_max": _Key("float", None),
    "dynamics.n_steps": _Key("int", 2000),
    "dynamics.rtol": _Key("float", 1e-8),
    "dynamics.atol": _Key("float", 1e-10),
    "dynamics.method": _Key("str", "DOP853", choices=METHODS),
    "dynamics.lambda": _Key("quantity", None, "frequency"),
    "dynamics.gamma_s": _Key("quantity", None, "frequency"),
    "dynamics.gamma_s_over_lambda": _Key("float", None),
    "dynamics.big_gamma_m": _Key("quantity", None, "frequency"),
    "dynamics.big_gamma_m_over_lambda": _Key("float", None),
    "dynamics.n_th": _Key("float", None),
    "dynamics.n_phonon_max": _Key("int", 4),
    "dynamics.g_e_over_detuning": _Key("float", 0.05),
    "dynamics.variance_mode": _Key("bool", False),
    "dynamics.include_linear": _Key("bool", False),
    # sweep
    "sweep.parameter": _Key("str", None),
    "sweep.values": _Key("floats", None),
    "sweep.mode": _Key("str", "simulate-exact", choices=SIM_MODES),
    "sweep.workers": _Key("int", 1),
    # output
    "output.dir": _Key("str", "out"),
    "output.prefix": _Key("str", "run"),
    "output.svg": _Key("bool", False),
    # analytic
    "analytic.n_list": _Key("ints", None),
    "analytic.eta": _Key("float", None),
}

MODE_REQUIREMENTS = {
    "budget": ("ensemble.n_spins",),
    "simulate-exact": ("ensemble.n_spins",),
    "simulate-moments": ("ensemble.n_spins",),
    "simulate-tc": ("ensemble.n_spins",),
    "analytic": ("analytic.n_list", "analytic.eta"),
    "sweep": ("ensemble.n_spins", "sweep.parameter", "sweep.values"),
}

SWEEPABLE = (
    "ensemble.n_spins", "ensemble.detuning_ratio", "dynamics.n_th",
    "dynamics.gamma_s_over_lambda", "dynamics.big_gamma_m_over_lambda",
    "dynamics.g_e_over_detuning", "device.temperature",
)


def required_keys_text() -> str:
    per_mode = "; ".join(f"{m}: {', '.join(k)}" for m, k in MODE_REQUIREMENTS.items())
    return f"required keys: run.mode (one of {', '.join(MODES)}); per mode: {per_mode}"


def _convert(key: str, spec: _Key, text: str, line: int):
    try:
        if spec.kind == "quantity":
            value = parse_quantity(text, spec.unit)
            return hz_to_rad(value) if spec.unit == "frequency" else value
        if spec.kind == "int":
            value = parse_quantity(text, None)
            if value != int(value):
                raise ValueError(f"{text!r} is not an integer")
            return int(value)
        if spec.kind == "float":
            return parse_quantity(text, None)
        if spec.kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "on", "off", "1", "0"):
                raise ValueError(f"{text!r} is not a boolean")
            return low in ("true", "yes", "on", "1")
        if spec.kind == "str":
            if spec.choices and text not in spec.choices:
                raise ValueError(f"{text!r} is not one of {', '.join(spec.choices)}")
            return text
        items = [s for s in text.replace(",", " ").split() if s]
        if not items:
            raise ValueError("empty list")
        values = [parse_quantity(s, None) for s in items]
        if spec.kind == "ints":
            if any(v != int(v) for v in values):
                raise ValueError(f"{text!r} must list integers")
            return tuple(int(v) for v in values)
        return tuple(values)
    except UnitError as exc:
        raise ConfigError(f"{key}: unit mismatch: {exc}", line) from None
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}", line) from None


@dataclass(frozen=True)
class DeviceConfig:
    guide: WaveguideSpec
    strain_d: float  # rad/s per strain
    omega_m: float
    temperature: float
    gamma_m: float  # phonon damping, rad/s (omega_m / Q when a Q factor is given)
    gamma_s: float
    g_single: float  # rad/s, from the override or the guide geometry
    g_single_derived: float
    lambda_so: float
    upsilon_x: float
    upsilon_y: float
    b_z: float


@dataclass(frozen=True)
class DynamicsConfig:
    n_spins: int
    lambda_twist: float
    gamma_s: float
    big_gamma_m: float
    n_th: float
    times: tuple  # output grid in seconds
    rtol: float
    atol: float
    method: str
    variance_mode: bool
    include_linear: bool
    detuning: float
    n_phonon_max: int
    g_e_over_detuning: float
    sources: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    values: Mapping[str, Any]  # every key, defaults filled in
    lines: Mapping[str, int]
    defaulted: tuple  # keys that took their default
    device: DeviceConfig | None
    budget: CouplingBudget | None
    dynamics: DynamicsConfig | None
    warnings: tuple = ()

    @property
    def output_dir(self) -> str:
        return self.values["output.dir"]

    def with_values(self, overrides: Mapping[str, Any]) -> "ScenarioConfig":
        """A new config with some ``section.key`` values replaced."""
        explicit = {k: v for k, v in self.values.items() if k not in self.defaulted}
        unknown = set(overrides) - set(_KEYS)
        if unknown:
            raise ConfigError(f"unknown key(s) {', '.join(sorted(unknown))}")
        explicit.update(overrides)
        return _build(explicit, dict(self.lines))


def parse_config(text: str) -> ScenarioConfig:
    entries = read_flat_checked(text)
    if not entries:
        raise ConfigError(f"empty configuration; {required_keys_text()}")
    explicit, lines = {}, {}
    for line, key, raw in entries:
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line)
        if key in explicit:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", line)
        explicit[key] = _convert(key, _KEYS[key], raw, line)
        lines[key] = line
    return _build(explicit, lines)


def read_flat_checked(text: str):
    try:
        return read_flat(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _build(explicit: dict, lines: dict) -> ScenarioConfig:
    if "run.mode" not in explicit:
        raise ConfigError(f"missing required key run.mode; {required_keys_text()}")
    mode = explicit["run.mode"]
    missing = [k for k in MODE_REQUIREMENTS[mode] if explicit.get(k) is None]
    if missing:
        raise ConfigError(f"mode {mode} is missing required key(s) {', '.join(missing)}; "
                          f"{required_keys_text()}")
    values = {k: explicit.get(k, spec.default) for k, spec in _KEYS.items()}
    defaulted = tuple(k for k in _KEYS if k not in explicit)
    notes: list[str] = []

    def fail(key, message):
        raise ConfigError(f"{key}: {message}", lines.get(key))

    for key in ("ensemble.n_spins", "dynamics.n_steps", "dynamics.n_phonon_max", "sweep.workers"):
        if values[key] is not None and values[key] < 1:
            fail(key, "must be a positive integer")
    for key in ("dynamics.t_max", "dynamics.lambda_t_max", "dynamics.rtol", "dynamics.atol",
                "device.omega_m", "device.strain_d"):
        if values[key] is not None and not values[key] > 0:
            fail(key, "must be positive")
    for key in ("dynamics.gamma_s", "dynamics.gamma_s_over_lambda", "dynamics.big_gamma_m",
                "dynamics.big_gamma_m_over_lambda", "dynamics.n_th", "device.temperature",
                "device.gamma_m", "device.gamma_s"):
        if values[key] is not None and values[key] < 0:
            fail(key, "must be non-negative")
    if values["dynamics.lambda"] is not None and values["dynamics.lambda"] == 0:
        fail("dynamics.lambda", "must be nonzero")
    if values["device.q_factor"] is not None and not values["device.q_factor"] > 0:
        fail("device.q_factor", "must be positive")
    if values["ensemble.detuning_ratio"] <= 1:
        fail("ensemble.detuning_ratio", "must exceed 1 (dispersive regime)")
    if not 0 < values["dynamics.g_e_over_detuning"] < 1:
        fail("dynamics.g_e_over_detuning", "must lie in (0, 1)")
    if values["dynamics.t_max"] is not None and values["dynamics.lambda_t_max"] is not None:
        fail("dynamics.lambda_t_max", "give either dynamics.t_max or dynamics.lambda_t_max")
    if mode == "analytic":
        if any(n < 1 for n in values["analytic.n_list"]):
            fail("analytic.n_list", "spin numbers must be positive")
        if not values["analytic.eta"] > 0:
            fail("analytic.eta", "must be positive")
    if mode == "sweep":
        if values["sweep.parameter"] not in SWEEPABLE:
            fail("sweep.parameter", f"must be one of {', '.join(SWEEPABLE)}")
        if values["sweep.parameter"] == "ensemble.n_spins":
            if any(v != int(v) or v < 1 for v in values["sweep.values"]):
                fail("sweep.values", "spin numbers must be positive integers")
        elif any(v < 0 for v in values["sweep.values"]):
            fail("sweep.values", "values must be non-negative")

    try:
        device = _device(values)
    except ValueError as exc:
        raise ConfigError(f"device block: {exc}") from None

    budget = dynamics = None
    n = values["ensemble.n_spins"]
    if n is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            n_th = values["dynamics.n_th"]
            budget = make_budget(device.g_single, n, values["ensemble.detuning_ratio"],
                                 device.gamma_m, device.gamma_s, device.omega_m,
                                 device.temperature, n_th=n_th)
        notes.extend(str(w.message) for w in caught)
    run_mode = values["sweep.mode"] if mode == "sweep" else mode
    if run_mode in SIM_MODES:
        dynamics = _dynamics(values, budget, run_mode, notes, lines)
    return ScenarioConfig(mode, values, lines, defaulted, device, budget, dynamics, tuple(notes))


def _device(values) -> DeviceConfig:
    spec_warnings = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        guide = WaveguideSpec(values["device.length"], values["device.width"],
                              values["device.thickness"], values["device.youngs_modulus"],
                              values["device.poisson_ratio"], values["device.density"])
    spec_warnings.extend(caught)
    for w in spec_warnings:
        warnings.warn(w.message, w.category, stacklevel=4)
    strain_d = hz_to_rad(values["device.strain_d"])
    derived = guide_coupling(guide, values["device.omega_m"], strain_d)
    gamma_m = values["device.gamma_m"]
    if values["device.q_factor"] is not None:
        gamma_m = values["device.omega_m"] / values["device.q_factor"]
    g_single = values["device.g_single"] if values["device.g_single"] is not None else derived
    if g_single <= 0:
        raise ValueError("g_single must be positive")
    return DeviceConfig(guide, strain_d, values["device.omega_m"], values["device.temperature"],
                        gamma_m, values["device.gamma_s"], g_single, derived,
                        values["device.lambda_so"], values["device.upsilon_x"],
                        values["device.upsilon_y"], values["device.b_z"])


def _rate(values, name, lam, fallback, sources, notes, lines):
    absolute, ratio = values[f"dynamics.{name}"], values[f"dynamics.{name}_over_lambda"]
    if ratio is not None:
        if absolute is not None:
            msg = (f"dynamics.{name}_over_lambda (line {lines.get(f'dynamics.{name}_over_lambda')}) "
                   f"overrides dynamics.{name} (line {lines.get(f'dynamics.{name}')})")
            warnings.warn(msg, RegimeWarning, stacklevel=5)
            notes.append(msg)
        sources[name] = "ratio to lambda"
        return ratio * abs(lam)
    if absolute is not None:
        sources[name] = "absolute"
        return absolute
    sources[name] = fallback[0]
    return fallback[1]


def ideal_t_min(n_spins: int, lambda_twist: float) -> float:
    """Large-J optimal twisting time, used for the default time grid."""
    return 3 ** (1 / 6) * float(n_spins) ** (-2 / 3) / abs(lambda_twist)


def _dynamics(values, budget: CouplingBudget, run_mode: str, notes, lines) -> DynamicsConfig:
    n = values["ensemble.n_spins"]
    sources: dict[str, str] = {}
    derived_lambda = values["dynamics.lambda"] is None
    lam = budget.lambda_twist if derived_lambda else values["dynamics.lambda"]
    sources["lambda"] = "device budget" if derived_lambda else "absolute"
    if derived_lambda:
        gs_fallback = ("device budget", budget.gamma_s_dephase)
        gm_fallback = ("device budget", budget.big_gamma_m)
    else:
        gs_fallback = gm_fallback = ("default 0", 0.0)
    gamma_s = _rate(values, "gamma_s", lam, gs_fallback, sources, notes, lines)
    big_gamma_m = _rate(values, "big_gamma_m", lam, gm_fallback, sources, notes, lines)
    if values["dynamics.n_th"] is not None:
        n_th, sources["n_th"] = values["dynamics.n_th"], "absolute"
    elif derived_lambda:
        n_th, sources["n_th"] = budget.n_th, "device budget"
    else:
        n_th, sources["n_th"] = 0.0, "default 0"

    if values["dynamics.t_max"] is not None:
        t_max = values["dynamics.t_max"]
    elif values["dynamics.lambda_t_max"] is not None:
        t_max = values["dynamics.lambda_t_max"] / abs(lam)
    elif run_mode == "simulate-tc":
        t_max = 1.0 / abs(lam)
    else:
        t_max = 3.0 * ideal_t_min(n, lam)
    steps = values["dynamics.n_steps"]
    times = tuple(t_max * k / (steps - 1) for k in range(steps)) if steps > 1 else (0.0, t_max)
    if not math.isfinite(t_max) or t_max <= 0:
        raise ConfigError("dynamics: resolved t_max must be positive and finite")
    return DynamicsConfig(
        n_spins=n, lambda_twist=lam, gamma_s=gamma_s, big_gamma_m=big_gamma_m, n_th=n_th,
        times=times, rtol=values["dynamics.rtol"], atol=values["dynamics.atol"],
        method=values["dynamics.method"], variance_mode=values["dynamics.variance_mode"],
        include_linear=values["dynamics.include_linear"], detuning=budget.detuning,
        n_phonon_max=values["dynamics.n_phonon_max"],
        g_e_over_detuning=values["dynamics.g_e_over_detuning"], sources=sources)
