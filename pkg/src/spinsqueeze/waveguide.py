"""Quasi-1D diamond waveguide acoustics and the spin-phonon coupling budget."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import constants
from .constants import HBAR, K_B
from .units import hz_to_rad

MIN_MODE_SPACING = hz_to_rad(50e6)


class GeometryWarning(UserWarning):
    pass


class RegimeWarning(UserWarning):
    pass


def lame_constants(e: float, nu: float) -> tuple[float, float]:
    """Lame parameters ``(lambda, mu)`` from Young's modulus and Poisson ratio."""
    if e <= 0:
        raise ValueError("Young's modulus must be positive")
    if not 0.0 <= nu < 0.5:
        raise ValueError("Poisson ratio must lie in [0, 0.5)")
    lam = nu * e / ((1 + nu) * (1 - 2 * nu))
    mu = e / (2 * (1 + nu))
    return lam, mu


@dataclass(frozen=True)
class WaveguideSpec:
    length_l: float
    width_w: float
    thickness_t: float
    youngs_e: float = constants.DIAMOND_YOUNGS
    poisson_nu: float = constants.DIAMOND_POISSON
    density_rho: float = constants.DIAMOND_DENSITY

    def __post_init__(self):
        dims = (self.length_l, self.width_w, self.thickness_t)
        if not all(math.isfinite(x) and x > 0 for x in dims):
            raise ValueError("waveguide dimensions must be positive")
        if self.youngs_e <= 0 or self.density_rho <= 0:
            raise ValueError("Young's modulus and density must be positive")
        if not 0.0 <= self.poisson_nu < 0.5:
            raise ValueError("Poisson ratio must lie in [0, 0.5)")
        if self.length_l < 10 * max(self.width_w, self.thickness_t):
            warnings.warn(
                f"length {self.length_l:g} m is not >> transverse size; "
                "the quasi-1D compression-mode picture is doubtful",
                GeometryWarning,
                stacklevel=3,
            )

    @property
    def volume(self) -> float:
        return self.length_l * self.width_w * self.thickness_t

    @property
    def mass(self) -> float:
        return self.density_rho * self.volume

    @property
    def longitudinal_velocity(self) -> float:
        return math.sqrt(self.youngs_e / self.density_rho)


@dataclass(frozen=True)
class PhononMode:
    branch_n: int
    omega: float
    q_zero: float
    zeta_abs: float = 1.0


@dataclass(frozen=True)
class ModeSpectrum:
    modes: tuple[PhononMode, ...]
    spacing: float  # smallest nearest-neighbour gap, rad/s
    well_separated: bool

    def __iter__(self):
        return iter(self.modes)

    def __len__(self):
        return len(self.modes)

    def __getitem__(self, i):
        return self.modes[i]


def zero_point_amplitude(omega: float, mass: float) -> float:
    """RMS ground-state displacement ``sqrt(hbar / (2 m omega))``."""
    if omega <= 0 or mass <= 0:
        raise ValueError("omega and mass must be positive")
    return math.sqrt(HBAR / (2.0 * mass * omega))


def compression_mode_spectrum(spec: WaveguideSpec, n_max: int) -> ModeSpectrum:
    """Standing-wave compression modes ``omega_n = n pi v_l / l``, n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    fundamental = math.pi * spec.longitudinal_velocity / spec.length_l
    modes = []
    for n in range(1, n_max + 1):
        omega = n * fundamental
        modes.append(PhononMode(n, omega, zero_point_amplitude(omega, spec.mass), 1.0))
    # gap to the neighbouring branch (or to zero for a single mode)
    omegas = np.array([0.0] + [m.omega for m in modes])
    spacing = float(np.min(np.diff(omegas)))
    return ModeSpectrum(tuple(modes), spacing, spacing >= MIN_MODE_SPACING)


def single_spin_coupling(d_strain: float, v_l: float, omega_m: float, rho: float,
                         volume: float) -> float:
    """Single-SiV strain coupling ``g = (d / v_l) sqrt(hbar omega_m / (2 rho V))``.

    ``d_strain`` is angular (rad/s per unit strain); so is the result.
    """
    if min(d_strain, v_l, omega_m, rho, volume) <= 0:
        raise ValueError("all coupling inputs must be positive")
    return d_strain / v_l * math.sqrt(HBAR * omega_m / (2.0 * rho * volume))


def guide_coupling(spec: WaveguideSpec, omega_m: float,
                   d_strain: float = constants.STRAIN_D) -> float:
    return single_spin_coupling(d_strain, spec.longitudinal_velocity, omega_m,
                                spec.density_rho, spec.volume)


def zeta_from_profile(k: float, u, du, f_over_2d: float = 0.0) -> complex:
    """Dimensionless coupling profile from a transverse mode profile.

    ``u = (u_x, u_y, u_z)`` are the transverse profile components at the spin
    and ``du`` maps ``"yx"`` (d/dy of u_x), ``"zx"``, ``"yy"``, ``"zy"``,
    ``"yz"`` to derivatives there. ``f_over_2d`` is f/(2d).
    """
    ux, uy, uz = u
    r = f_over_2d
    wave = 1j * (ux + r * uz) + uy  # coefficient of k
    grad = (r * du.get("zx", 0.0) - du.get("yy", 0.0)
            - 1j * (du.get("yx", 0.0) + r * du.get("yz", 0.0) + du.get("zy", 0.0) / 2))
    if k == 0:
        if grad != 0:
            raise ZeroDivisionError("profile has transverse gradients; zeta diverges at k = 0")
        return complex(wave)
    return complex(math.copysign(1.0, k) * wave + grad / abs(k))


def zeta_profile(spec: WaveguideSpec, mode: PhononMode, position, direction: int = 1,
                 f_over_2d: float = 0.0) -> complex:
    """Profile of the approximate compression mode ``u ~ e_x cos(omega x / v_l)``.

    The transverse profile is uniform and purely along x, so the result does
    not depend on where inside the cross-section the spin sits.
    """
    x, y, z = position
    inside = (0 <= x <= spec.length_l and abs(y) <= spec.width_w / 2
              and abs(z) <= spec.thickness_t / 2)
    if not inside:
        raise ValueError(f"position {position} lies outside the waveguide")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    k = direction * mode.omega / spec.longitudinal_velocity
    return zeta_from_profile(k, (1.0, 0.0, 0.0), {}, f_over_2d)


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation; exactly 0 at T = 0."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        return 0.0
    x = HBAR * omega / (K_B * temperature)
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class CouplingBudget:
    """Device-derived rates, all angular (rad/s)."""

    g_single: float
    n_spins: int
    g_collective: float
    detuning: float
    lambda_twist: float
    gamma_m: float
    gamma_s_dephase: float
    big_gamma_m: float
    n_th: float

    @property
    def eta(self) -> float:
        """Single-spin coupling-to-decay ratio ``g / max(n_th gamma_m, gamma_s)``."""
        return coupling_to_decay(self.g_single, self.n_th, self.gamma_m, self.gamma_s_dephase)

    @property
    def detuning_ratio(self) -> float:
        return self.detuning / self.g_collective


def coupling_to_decay(g_single: float, n_th: float, gamma_m: float, gamma_s: float) -> float:
    denom = max(n_th * gamma_m, gamma_s)
    if denom <= 0:
        raise ValueError("eta needs max(n_th * gamma_m, gamma_s) > 0")
    return g_single / denom


def make_budget(g_single: float, n_spins: int, detuning_ratio: float, gamma_m: float,
                gamma_s: float, omega_m: float, temperature: float,
                n_th: float | None = None) -> CouplingBudget:
    """Assemble the coupling budget for ``n_spins`` spins at ``Delta = ratio * g_e``.

    ``n_th`` overrides the Bose factor computed from ``(omega_m, temperature)``.
    """
    if n_spins < 1:
        raise ValueError("n_spins must be >= 1")
    if g_single <= 0:
        raise ValueError("g_single must be positive")
    if detuning_ratio <= 1:
        raise ValueError("detuning_ratio must exceed 1 (dispersive regime)")
    if detuning_ratio < 5:
        warnings.warn(f"detuning ratio {detuning_ratio:g} < 5: effective twisting "
                      "model is only marginally valid", RegimeWarning, stacklevel=2)
    if gamma_m < 0 or gamma_s < 0:
        raise ValueError("decay rates must be non-negative")
    if n_th is None:
        n_th = thermal_occupation(omega_m, temperature)
    g_e = math.sqrt(n_spins) * g_single
    delta = detuning_ratio * g_e
    return CouplingBudget(
        g_single=g_single,
        n_spins=int(n_spins),
        g_collective=g_e,
        detuning=delta,
        lambda_twist=g_e**2 / delta,
        gamma_m=gamma_m,
        gamma_s_dephase=gamma_s,
        big_gamma_m=gamma_m * g_e**2 / delta**2,
        n_th=n_th,
    )
