"""Squeezing parameter, its minimizing quadrature, and closed-form optima."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dicke import DickeOperators, align_mean_spin_x, expect
from .moments import MomentTrajectory, MomentVector, regime_parameters
from .waveguide import RegimeWarning, coupling_to_decay

BETA_LIMIT = 0.3


@dataclass(frozen=True)
class SqueezingPoint:
    time: float
    a_sum: float
    b_diff: float
    c_cross: float
    v_min: float
    alpha_min: float
    xi2: float


def transverse_second_moment(alpha, a_sum, b_diff, c_cross):
    """``<(sin a J_y + cos a J_z)^2> = A/2 - (B/2) cos 2a + C sin 2a``."""
    return 0.5 * a_sum - 0.5 * b_diff * np.cos(2 * alpha) + c_cross * np.sin(2 * alpha)


def minimizing_angle(a_sum: float, b_diff: float, c_cross: float) -> float:
    """Angle in [0, pi) of the least-uncertain transverse axis.

    Both stationary angles are evaluated and the smaller value wins; when
    B = C = 0 every angle is minimal and 0 is returned.
    """
    if b_diff == 0 and c_cross == 0:
        return 0.0
    a1 = _wrap(0.5 * math.atan2(-2 * c_cross, b_diff))
    a2 = _wrap(a1 + 0.5 * math.pi)
    f1 = transverse_second_moment(a1, a_sum, b_diff, c_cross)
    f2 = transverse_second_moment(a2, a_sum, b_diff, c_cross)
    return a1 if f1 <= f2 else a2


def _wrap(angle: float) -> float:
    # tiny negative angles round to exactly pi under %
    a = angle % math.pi
    return 0.0 if a >= math.pi else a


def xi_squared(moments: MomentVector, n_spins: int, time: float = 0.0,
               variance_mode: bool = False) -> SqueezingPoint:
    """Kitagawa-Ueda parameter ``4 (Delta J_perp^2)_min / N``.

    By default raw second moments are used. ``variance_mode`` subtracts the
    transverse means first.
    """
    if n_spins < 1:
        raise ValueError("n_spins must be >= 1")
    y2, z2, yz = moments.jy2, moments.jz2, moments.jyz
    if variance_mode:
        y2 = y2 - moments.jy**2
        z2 = z2 - moments.jz**2
        yz = yz - moments.jy * moments.jz
    a, b, c = y2 + z2, y2 - z2, yz
    v_min = 0.5 * (a - math.sqrt(b * b + 4 * c * c))
    return SqueezingPoint(time, a, b, c, v_min, minimizing_angle(a, b, c), 4 * v_min / n_spins)


def aligned_moments(expectations: dict, phi: float | None = None) -> MomentVector:
    """Moments in the frame rotated about z so the mean spin lies along +x.

    ``expectations`` holds jx, jy, jz, jx2, jy2, jz2, jxy, jxz, jyz (real parts).
    """
    e = {k: float(np.real(v)) for k, v in expectations.items()}
    if phi is None:
        phi = math.atan2(e["jy"], e["jx"])
    c, s = math.cos(phi), math.sin(phi)
    return MomentVector(
        jx=c * e["jx"] + s * e["jy"],
        jy=-s * e["jx"] + c * e["jy"],
        jz=e["jz"],
        jy2=s * s * e["jx2"] + c * c * e["jy2"] - 2 * s * c * e["jxy"],
        jz2=e["jz2"],
        jyz=-s * e["jxz"] + c * e["jyz"],
    )


def moments_from_density(rho: np.ndarray, ops: DickeOperators, realign: bool = True
                         ) -> MomentVector:
    if realign:
        rho, _ = align_mean_spin_x(np.asarray(rho), ops)
    jy, jz = ops.jy, ops.jz
    ev = lambda op: expect(op, rho).real  # noqa: E731
    return MomentVector(
        jx=ev(ops.jx), jy=ev(jy), jz=ev(jz),
        jy2=ev(jy @ jy), jz2=ev(jz @ jz),
        jyz=0.5 * (ev(jy @ jz) + ev(jz @ jy)),
    )


def xi_from_density(rho, ops: DickeOperators, time: float = 0.0,
                    variance_mode: bool = False) -> SqueezingPoint:
    """Squeezing of a Dicke-subspace state after realigning its mean spin.

    Raises ``MeanSpinError`` when the transverse mean spin has vanished.
    """
    rho = getattr(rho, "elements", rho)
    if np.shape(rho) != (ops.dim, ops.dim):
        raise ValueError("state and operators have different dimensions")
    return xi_squared(moments_from_density(rho, ops), ops.n_spins, time, variance_mode)


class Optimum(NamedTuple):
    t_opt: float
    xi2_opt: float
    interior: bool
    index: int


def locate_minimum(times, values) -> Optimum:
    """Grid minimum refined by a parabola through the bracketing triple.

    Ties resolve to the earliest time. A minimum on either end of the grid
    is returned as is with ``interior=False``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size < 3:
        raise ValueError("need at least three points")
    k = int(np.argmin(y))
    if k == 0 or k == t.size - 1:
        return Optimum(float(t[k]), float(y[k]), False, k)
    (t0, t1, t2), (y0, y1, y2) = t[k - 1:k + 2], y[k - 1:k + 2]
    d01, d12 = (y1 - y0) / (t1 - t0), (y2 - y1) / (t2 - t1)
    curvature = (d12 - d01) / (t2 - t0)
    if curvature <= 0:
        return Optimum(float(t1), float(y1), True, k)
    tv = 0.5 * (t0 + t1) - d01 / (2 * curvature)
    tv = min(max(tv, t0), t2)
    yv = y0 + d01 * (tv - t0) + curvature * (tv - t0) * (tv - t1)
    return Optimum(float(tv), float(yv), True, k)


@dataclass(frozen=True)
class SqueezingTrace:
    points: tuple
    t_opt: float  # grid optimum
    xi2_opt: float
    refined: Optimum

    @property
    def times(self) -> np.ndarray:
        return np.array([p.time for p in self.points])

    @property
    def xi2(self) -> np.ndarray:
        return np.array([p.xi2 for p in self.points])


def locate_optimum(points: Sequence[SqueezingPoint]) -> Optimum:
    return locate_minimum([p.time for p in points], [p.xi2 for p in points])


def squeezing_trace(points: Sequence[SqueezingPoint]) -> SqueezingTrace:
    points = tuple(points)
    xi2 = np.array([p.xi2 for p in points])
    k = int(np.argmin(xi2))
    refined = locate_optimum(points) if len(points) >= 3 else Optimum(points[k].time, xi2[k], False, k)
    return SqueezingTrace(points, points[k].time, float(xi2[k]), refined)


def trace_from_moments(traj: MomentTrajectory, n_spins: int, variance_mode: bool = False
                       ) -> SqueezingTrace:
    return squeezing_trace(
        xi_squared(traj[k], n_spins, float(t), variance_mode) for k, t in enumerate(traj.times))


def trace_from_expectations(times, expectations: dict, n_spins: int,
                            variance_mode: bool = False) -> tuple[SqueezingTrace, list]:
    """Squeezing trace from a Lindblad run recorded with the moment observables.

    Returns the trace and the realigned moment vectors.
    """
    aligned = []
    for k in range(len(times)):
        aligned.append(aligned_moments({name: v[k] for name, v in expectations.items()}))
    points = [xi_squared(m, n_spins, float(t), variance_mode) for m, t in zip(aligned, times)]
    return squeezing_trace(points), aligned


# closed forms ------------------------------------------------------------------

def ideal_optimum(j_total: float, lambda_twist: float) -> tuple[float, float]:
    """Large-J optimum of ideal twisting: ``(t_min, xi2_opt)``."""
    if j_total < 10:
        warnings.warn(f"J = {j_total:g} is small; the large-J optimum is only indicative",
                      RegimeWarning, stacklevel=2)
    t_min = 3 ** (1 / 6) * (2 * j_total) ** (-2 / 3) / lambda_twist
    xi2 = 0.5 * (2 * j_total / 3) ** (-2 / 3)
    return t_min, xi2


class ShortTimeVariance(NamedTuple):
    value: float
    alpha: float
    beta: float
    alpha_ok: bool
    beta_ok: bool


def short_time_variance(j_total: float, lambda_twist: float, t: float) -> ShortTimeVariance:
    """``(J/2) (1/(4 alpha^2) + (2/3) beta^2)`` with its validity flags."""
    alpha, beta = regime_parameters(j_total, lambda_twist, t)
    alpha, beta = float(alpha), float(beta)
    value = 0.5 * j_total * (0.25 / alpha**2 + (2.0 / 3.0) * beta**2)
    return ShortTimeVariance(value, alpha, beta, alpha > 1, beta <= BETA_LIMIT)


class DissipativeEstimate(NamedTuple):
    eta: float
    xi2_opt: float
    t_min: float


def dissipative_estimate(j_total: float, g_single: float, n_th: float, gamma_m: float,
                         gamma_s: float) -> DissipativeEstimate:
    """``xi2_opt ~ 2 / sqrt(J eta)`` reached at ``t ~ 1 / (gamma_s sqrt(J eta))``."""
    eta = coupling_to_decay(g_single, n_th, gamma_m, gamma_s)
    root = math.sqrt(j_total * eta)
    t_min = 1.0 / (gamma_s * root) if gamma_s > 0 else math.inf
    return DissipativeEstimate(eta, 2.0 / root, t_min)


def estimate_from_eta(j_total: float, eta: float) -> float:
    return 2.0 / math.sqrt(j_total * eta)


def fig3b_rows(n_list, eta: float) -> list[tuple[int, float, float]]:
    """``(N, ideal xi2_opt, dissipative xi2_opt)`` per spin number."""
    rows = []
    for n in n_list:
        if n < 1:
            raise ValueError("spin numbers must be positive")
        j = n / 2
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            _, ideal = ideal_optimum(j, 1.0)
        rows.append((int(n), ideal, estimate_from_eta(j, eta)))
    return rows

