"""Collective spin operators on the symmetric (Dicke) subspace.

States are indexed by m = -J, ..., +J in ascending order, J = N/2. Up to
``DENSE_LIMIT`` spins the operators are dense ndarrays; above that they are
scipy CSR matrices (J_z diagonal, J_+- single off-diagonal band).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

DENSE_LIMIT = 200
MAX_SPINS = 5000


def spin_projections(n_spins: int) -> np.ndarray:
    j = n_spins / 2
    return np.arange(-j, j + 1.0)


def ladder_coefficients(n_spins: int) -> np.ndarray:
    """<m+1| J_+ |m> for m = -J .. J-1."""
    j = n_spins / 2
    m = spin_projections(n_spins)[:-1]
    return np.sqrt(j * (j + 1) - m * (m + 1))


@dataclass(frozen=True)
class DickeOperators:
    n_spins: int
    j_total: float
    jx: object = field(repr=False)
    jy: object = field(repr=False)
    jz: object = field(repr=False)
    j_plus: object = field(repr=False)
    j_minus: object = field(repr=False)
    j_squared: object = field(repr=False)
    m: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.jz)


def build_dicke_operators(n_spins: int, sparse: bool | None = None) -> DickeOperators:
    if int(n_spins) != n_spins or n_spins < 1:
        raise ValueError("n_spins must be a positive integer")
    n_spins = int(n_spins)
    if n_spins > MAX_SPINS:
        raise ValueError(f"n_spins above {MAX_SPINS} is not supported; use the moment equations")
    if sparse is None:
        sparse = n_spins > DENSE_LIMIT
    j = n_spins / 2
    m = spin_projections(n_spins)
    dim = n_spins + 1

    jp = sp.diags(ladder_coefficients(n_spins).astype(complex), -1, shape=(dim, dim), format="csr")
    jm = jp.conj().T.tocsr()
    jz = sp.diags(m.astype(complex), 0, format="csr")
    jx = ((jp + jm) * 0.5).tocsr()
    jy = ((jp - jm) * (-0.5j)).tocsr()
    j2 = sp.identity(dim, dtype=complex, format="csr") * (j * (j + 1))
    ops = (jx, jy, jz, jp, jm, j2)
    if not sparse:
        ops = tuple(o.toarray() for o in ops)
    return DickeOperators(n_spins, j, *ops, m=m)


@dataclass(frozen=True)
class SpinState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if abs(np.linalg.norm(amps) - 1.0) > 1e-12:
            raise ValueError("spin state must be normalized")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_spins(self) -> int:
        return self.amplitudes.size - 1

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def coherent_spin_state_x(n_spins: int) -> SpinState:
    """Coherent spin state along +x: ``c_m = 2^-J sqrt(binom(2J, J+m))``."""
    if int(n_spins) != n_spins or n_spins < 1:
        raise ValueError("n_spins must be a positive integer")
    n = int(n_spins)
    k = np.arange(n + 1)  # k = J + m
    log_c = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)) - 0.5 * n * np.log(2.0)
    amps = np.exp(log_c)
    return SpinState(amps / np.linalg.norm(amps))


def dicke_state(n_spins: int, m: float) -> SpinState:
    """|J, m> basis state."""
    amps = np.zeros(n_spins + 1, dtype=complex)
    amps[int(round(m + n_spins / 2))] = 1.0
    return SpinState(amps)


def expect(op, state) -> complex:
    """<op> for a state vector or density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    # tr(op rho) without forming the product
    if sp.issparse(op):
        return complex(op.multiply(state.T).sum())
    return complex(np.einsum("ij,ji->", op, state))


def z_rotation(n_spins: int, angle: float) -> np.ndarray:
    """Diagonal of exp(-i angle J_z)."""
    return np.exp(-1j * angle * spin_projections(n_spins))


class MeanSpinError(ValueError):
    """The transverse mean spin vanished, so no squeezing frame exists."""


def mean_spin_angle(rho, ops: DickeOperators, rel_tol: float = 1e-12) -> float:
    """Azimuth of the mean spin in the x-y plane."""
    mx = expect(ops.jx, rho).real
    my = expect(ops.jy, rho).real
    if mx * mx + my * my < rel_tol * ops.j_total**2:
        raise MeanSpinError("mean spin vanished in the x-y plane; cannot realign")
    return float(np.arctan2(my, mx))


def rotate_density_z(rho: np.ndarray, n_spins: int, angle: float) -> np.ndarray:
    """exp(-i angle J_z) rho exp(+i angle J_z): rotates the spin by +angle about z."""
    u = z_rotation(n_spins, angle)
    return u[:, None] * rho * u.conj()[None, :]


def align_mean_spin_x(rho: np.ndarray, ops: DickeOperators) -> tuple[np.ndarray, float]:
    """Rotate about z so the mean spin points along +x; returns (rho', angle)."""
    phi = mean_spin_angle(rho, ops)
    return rotate_density_z(rho, ops.n_spins, -phi), phi
