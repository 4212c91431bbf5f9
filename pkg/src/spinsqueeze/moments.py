"""Linearized moment equations for large ensembles.

Six expectations ``<J_x>, <J_y>, <J_z>, <J_y^2>, <J_z^2>, <J_yz>`` are
propagated with ``J_yz = (J_y J_z + J_z J_y) / 2``. The right-hand sides
are the short-time linearization of the twisting master equation with
mechanical decay and dephasing; they are transcribed term for term, so
they keep its conventions (<J_x> decays at gamma_s and the twisting enters
as lambda * J; see ``rhs``).
"""
from __future__ import annotations

import logging
from dataclasses import astuple, dataclass, field

import numpy as np

from .integrator import check_times, integrate

log = logging.getLogger(__name__)

BETA_WARN = 0.3
CAUCHY_SCHWARZ_SLACK = 1e-9
COLUMNS = ("jx", "jy", "jz", "jy2", "jz2", "jyz")


@dataclass(frozen=True)
class MomentVector:
    jx: float
    jy: float
    jz: float
    jy2: float
    jz2: float
    jyz: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))

    @classmethod
    def from_array(cls, values) -> "MomentVector":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class MomentParams:
    j_total: float
    lambda_twist: float
    gamma_s: float = 0.0
    big_gamma_m: float = 0.0
    n_th: float = 0.0

    def __post_init__(self):
        if self.j_total < 0.5 or (2 * self.j_total) != int(2 * self.j_total):
            raise ValueError("j_total must be a half-integer >= 1/2")
        if min(self.gamma_s, self.big_gamma_m, self.n_th) < 0:
            raise ValueError("rates and n_th must be non-negative")
        if not np.isfinite([self.lambda_twist, self.gamma_s, self.big_gamma_m, self.n_th]).all():
            raise ValueError("moment parameters must be finite")


def initial_moments(j_total: float) -> MomentVector:
    """Coherent spin state along +x."""
    if j_total < 0.5:
        raise ValueError("j_total must be >= 1/2")
    return MomentVector(j_total, 0.0, 0.0, j_total / 2, j_total / 2, 0.0)


def rhs(y, p: MomentParams) -> np.ndarray:
    jx, jy, jz, jy2, jz2, jyz = y
    j, lam, gs, gm = p.j_total, p.lambda_twist, p.gamma_s, p.big_gamma_m
    a = p.n_th + 0.5
    jj1 = j * (j + 1)
    return np.array([
        -gs * jx,
        lam * j * jz - gs * jy - gm * a * jy + gm * jyz,
        -2 * gm * a * jz - gm * (jj1 - jz2),
        2 * j * lam * jyz - 2 * gs * (jy2 - j / 2) + gm * (j + 0.5) * jz
        - 2 * gm * a * (jy2 - jz2),
        -2 * gm * a * (3 * jz2 - jj1) + gm * jz * (1 - 2 * j * (j + 0.5)),
        lam * j * jz2 - gs * jyz - 5 * a * gm * jyz - gm * (j**2 - 0.25) * jy,
    ])


@dataclass
class MomentTrajectory:
    times: np.ndarray
    values: np.ndarray  # (n_times, 6) in COLUMNS order
    params: MomentParams
    warnings: list = field(default_factory=list)
    n_steps: int = 0

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> MomentVector:
        return MomentVector.from_array(self.values[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, COLUMNS.index(name)]


def evolve_moments(params: MomentParams, times, *, initial: MomentVector | None = None,
                   rtol: float = 1e-8, atol: float = 1e-10, method: str = "DOP853"
                   ) -> MomentTrajectory:
    times = check_times(times)
    y0 = (initial or initial_moments(params.j_total)).as_array()
    out = np.empty((times.size, 6))

    def record(k, y):
        out[k] = y

    steps = integrate(lambda t, y: rhs(y, params), y0, times, record, rtol, atol, method)
    traj = MomentTrajectory(times, out, params, n_steps=steps)
    _validity_checks(traj)
    return traj


def regime_parameters(j_total: float, lambda_twist: float, t) -> tuple:
    """``alpha = J lambda t`` and ``beta = J (lambda t)^2``."""
    lt = lambda_twist * np.asarray(t)
    return j_total * lt, j_total * lt**2


def _validity_checks(traj: MomentTrajectory) -> None:
    p = traj.params
    _, beta = regime_parameters(p.j_total, abs(p.lambda_twist), traj.times)
    over = np.flatnonzero(beta > BETA_WARN)
    if over.size:
        traj.warnings.append(
            f"beta = J (lambda t)^2 exceeds {BETA_WARN} from t = {traj.times[over[0]]:.6g} s; "
            "the short-time closed forms no longer apply")
    jy2, jz2, jyz = traj.column("jy2"), traj.column("jz2"), traj.column("jyz")
    bad = np.flatnonzero((jy2 < 0) | (jz2 < 0))
    if bad.size:
        traj.warnings.append(f"negative second moment at t = {traj.times[bad[0]]:.6g} s")
    cs = np.abs(jyz) - np.sqrt(np.clip(jy2 * jz2, 0, None))
    bad = np.flatnonzero(cs > CAUCHY_SCHWARZ_SLACK)
    if bad.size:
        traj.warnings.append(
            f"|<J_yz>| exceeds sqrt(<J_y^2><J_z^2>) from t = {traj.times[bad[0]]:.6g} s")
    for w in traj.warnings:
        log.warning(w)
