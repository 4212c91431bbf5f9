"""SiV- ground-state structure: spin-orbit, Jahn-Teller and Zeeman terms.

Matrices act on the product basis ``{e_x, e_y} x {down, up}`` in the order
``(e_x down, e_y down, e_x up, e_y up)``. Eigenstates are labelled a, b, c, d
with a, c in the spin-down block and b, d in the spin-up block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import constants

# orbital operators on {e_x, e_y}; L_z |e_+-> = +-|e_+->, e_+- = (e_x +- i e_y)/sqrt 2
ORB_LZ = np.array([[0, -1j], [1j, 0]])
ORB_SZ = np.array([[1, 0], [0, -1]], dtype=complex)  # |e_x><e_x| - |e_y><e_y|
ORB_SX = np.array([[0, 1], [1, 0]], dtype=complex)  # |e_x><e_y| + |e_y><e_x|
SPIN_Z = np.diag([-0.5, 0.5]).astype(complex)  # down first
I2 = np.eye(2, dtype=complex)

LABELS = ("a", "b", "c", "d")


@dataclass(frozen=True)
class SiVParams:
    """Ground-state parameters; all frequencies angular (rad/s)."""

    lambda_so: float = constants.LAMBDA_SO
    upsilon_x: float = 0.0
    upsilon_y: float = 0.0
    b_z: float = 0.0
    f_orbital: float = constants.ORBITAL_ZEEMAN_FACTOR
    gamma_s_gyro: float = constants.SPIN_GYROMAGNETIC
    gamma_l_gyro: float = constants.ORBITAL_GYROMAGNETIC
    include_orbital_zeeman: bool = False

    def __post_init__(self):
        values = (self.lambda_so, self.upsilon_x, self.upsilon_y, self.b_z,
                  self.f_orbital, self.gamma_s_gyro, self.gamma_l_gyro)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("SiV parameters must be finite")
        if self.lambda_so <= 0:
            raise ValueError("lambda_so must be positive")
        if self.upsilon >= self.lambda_so:
            raise ValueError("Jahn-Teller strength must stay below lambda_so")
        if self.b_z < 0:
            raise ValueError("b_z must be non-negative")

    @property
    def upsilon(self) -> float:
        return math.hypot(self.upsilon_x, self.upsilon_y)

    @property
    def d_splitting(self) -> float:
        return math.sqrt(self.lambda_so**2 + 4.0 * self.upsilon**2)

    @property
    def omega_b(self) -> float:
        return self.gamma_s_gyro * self.b_z


@dataclass(frozen=True)
class SiVGroundState:
    energies: np.ndarray  # (w_a, w_b, w_c, w_d), rad/s
    theta: float
    phi: float
    d_splitting: float
    omega_b: float
    eigenvectors: np.ndarray = field(repr=False)  # columns a, b, c, d

    def state(self, label: str) -> np.ndarray:
        return self.eigenvectors[:, LABELS.index(label)]


def jahn_teller(upsilon_x: float, upsilon_y: float) -> np.ndarray:
    """E x e Jahn-Teller term on the orbital doublet."""
    return upsilon_x * ORB_SZ + upsilon_y * ORB_SX


def build_ground_hamiltonian(params: SiVParams) -> np.ndarray:
    h = -params.lambda_so * np.kron(SPIN_Z, ORB_LZ)
    h += np.kron(I2, jahn_teller(params.upsilon_x, params.upsilon_y))
    h += params.omega_b * np.kron(SPIN_Z, I2)
    if params.include_orbital_zeeman:
        h += params.f_orbital * params.gamma_l_gyro * params.b_z * np.kron(I2, ORB_LZ)
    # symmetrize away the last ulp so H == H^dagger exactly
    return 0.5 * (h + h.conj().T)


def closed_form_energies(params: SiVParams) -> np.ndarray:
    d, wb = params.d_splitting, params.omega_b
    return np.array([-(d + wb) / 2, -(d - wb) / 2, (d - wb) / 2, (d + wb) / 2])


def mixing_angles(params: SiVParams, delta: float | None = None) -> tuple[float, float]:
    """Orbital mixing angles ``(theta, phi)``.

    ``tan(theta) = (2 Upsilon_x + delta) / sqrt(lambda_so^2 + 4 Upsilon_y^2)``.
    The default ``delta = D`` is the value for which the four closed-form
    states are exact eigenvectors; ``delta=0.0`` gives the literal small-offset
    reading, which is only a diagnostic.
    """
    if delta is None:
        delta = params.d_splitting
    lam, ux, uy = params.lambda_so, params.upsilon_x, params.upsilon_y
    theta = math.atan2(2.0 * ux + delta, math.sqrt(lam**2 + 4.0 * uy**2))
    phi = math.atan(2.0 * uy / lam)
    return theta, phi


def closed_form_states(theta: float, phi: float) -> np.ndarray:
    """Columns |a>, |b>, |c>, |d> in the product basis."""
    c, s = math.cos(theta), math.sin(theta)
    em, ep = np.exp(-1j * phi), np.exp(1j * phi)
    vecs = np.zeros((4, 4), dtype=complex)
    vecs[:2, 0] = (c, -1j * s * em)
    vecs[2:, 1] = (c, 1j * s * ep)
    vecs[:2, 2] = (s, 1j * c * em)
    vecs[2:, 3] = (s, -1j * c * ep)
    return vecs


def _align_to_reference(values, vectors, reference, tol):
    """Project reference states onto numerical eigenspaces.

    Degenerate eigenvalues are grouped within ``tol`` so that the returned
    basis inside each group is the one closest to the reference states.
    """
    aligned = np.empty_like(reference)
    for k in range(reference.shape[1]):
        ref = reference[:, k]
        weights = np.abs(vectors.conj().T @ ref) ** 2
        centre = values[np.argmax(weights)]
        cols = np.abs(values - centre) <= tol
        block = vectors[:, cols]
        v = block @ (block.conj().T @ ref)
        aligned[:, k] = v / np.linalg.norm(v)
    return aligned


def diagonalize_ground(params: SiVParams) -> SiVGroundState:
    """Numerically diagonalize and label the four ground states.

    Without the orbital Zeeman term the eigenvectors are phase-fixed (and
    degenerate pairs resolved) by maximal overlap with the closed-form states.
    With it, no closed form exists; eigenvectors are then sorted by energy and
    phased so their largest component is real and positive.
    """
    h = build_ground_hamiltonian(params)
    values, vectors = np.linalg.eigh(h)
    theta, phi = mixing_angles(params)
    tol = 1e-9 * max(params.lambda_so, np.max(np.abs(values)))
    if params.include_orbital_zeeman:
        idx = np.argmax(np.abs(vectors), axis=0)
        phases = vectors[idx, np.arange(4)]
        eigvecs = vectors * (np.abs(phases) / phases)
        energies = values
    else:
        eigvecs = _align_to_reference(values, vectors, closed_form_states(theta, phi), tol)
        energies = np.real(np.einsum("ik,ij,jk->k", eigvecs.conj(), h, eigvecs))
    return SiVGroundState(
        energies=energies,
        theta=theta,
        phi=phi,
        d_splitting=params.d_splitting,
        omega_b=params.omega_b,
        eigenvectors=eigvecs,
    )


@dataclass(frozen=True)
class StrainInput:
    """Local strain tensor plus the four susceptibilities (rad/s per strain)."""

    eps: np.ndarray
    t_perp: float = 0.0
    t_par: float = 0.0
    d_strain: float = constants.STRAIN_D
    f_strain: float = 0.0

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        if eps.shape != (3, 3):
            raise ValueError("strain tensor must be 3x3")
        if not np.all(np.isfinite(eps)):
            raise ValueError("strain tensor must be finite")
        if not np.allclose(eps, eps.T, rtol=0, atol=1e-15 * max(1.0, np.abs(eps).max())):
            raise ValueError("strain tensor must be symmetric")
        object.__setattr__(self, "eps", eps)


class StrainCoupling(NamedTuple):
    operator: np.ndarray  # in the {a, b, c, d} eigenbasis
    common_shift: float  # A1g channel, identical for all four levels
    e_egx: float
    e_egy: float


def strain_components(inp: StrainInput) -> tuple[float, float, float]:
    """Symmetry-adapted strain ``(eps_A1g, eps_Egx, eps_Egy)``."""
    e = inp.eps
    a1g = inp.t_perp * (e[0, 0] + e[1, 1]) + inp.t_par * e[2, 2]
    egx = inp.d_strain * (e[0, 0] - e[1, 1]) + inp.f_strain * e[2, 0]
    egy = -2.0 * inp.d_strain * e[0, 1] + inp.f_strain * e[1, 2]
    return a1g, egx, egy


def orbital_raising() -> np.ndarray:
    """L_+ = |c><a| + |d><b| in the {a, b, c, d} basis."""
    lp = np.zeros((4, 4), dtype=complex)
    lp[2, 0] = 1.0
    lp[3, 1] = 1.0
    return lp


def strain_operator(inp: StrainInput) -> StrainCoupling:
    a1g, egx, egy = strain_components(inp)
    lp = orbital_raising()
    lm = lp.conj().T
    op = egx * (lm + lp) - 1j * egy * (lm - lp)
    return StrainCoupling(op, a1g, egx, egy)


def strain_product_basis(inp: StrainInput) -> np.ndarray:
    """Full strain Hamiltonian on the product basis, A1g shift included."""
    a1g, egx, egy = strain_components(inp)
    orb = a1g * I2 + egx * ORB_SZ + egy * ORB_SX
    return np.kron(I2, orb)
