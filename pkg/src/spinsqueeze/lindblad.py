"""Density-matrix evolution under Lindblad master equations.

Two models are provided: the effective one-axis-twisting (OAT) equation on
the Dicke subspace, and the full Tavis-Cummings spin x phonon model used to
check the effective reduction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dicke import DickeOperators, SpinState, build_dicke_operators
from .integrator import IntegrationError, check_times, integrate

log = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-7
TRUNCATION_TOL = 1e-8

class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    elements: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.all(np.isfinite(rho)):
            raise ValueError("density matrix must be finite")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > TRACE_TOL:
            raise ValueError("density matrix trace differs from 1")
        object.__setattr__(self, "elements", rho)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def from_state(cls, state) -> "DensityMatrix":
        if isinstance(state, DensityMatrix):
            return state
        if isinstance(state, SpinState):
            return cls(state.density())
        state = np.asarray(state, dtype=complex)
        if state.ndim == 1:
            return cls(np.outer(state, state.conj()))
        return cls(state)


@dataclass
class LindbladSpec:
    """Hamiltonian (rad/s) plus ``(jump operator, rate)`` channels."""

    hamiltonian: object
    channels: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        dim = self.hamiltonian.shape[0]
        if self.hamiltonian.shape != (dim, dim):
            raise ValueError("Hamiltonian must be square")
        for op, rate in self.channels:
            if op.shape != (dim, dim):
                raise ValueError("jump operator dimension does not match the Hamiltonian")
            if not (rate >= 0 and math.isfinite(rate)):
                raise ValueError("channel rates must be finite and non-negative")
        if not self.labels:
            self.labels = [f"L{k}" for k in range(len(self.channels))]

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray | None  # (n_times, dim, dim) unless storage-lean
    expectations: dict = field(default_factory=dict)
    trace_drift: np.ndarray | None = None
    hermiticity_error: np.ndarray | None = None
    min_eigenvalue: np.ndarray | None = None
    warnings: list = field(default_factory=list)
    n_steps: int = 0

    def __len__(self):
        return len(self.times)


def _is_diagonal(a) -> bool:
    if sp.issparse(a):
        coo = a.tocoo()
        return bool(np.all(coo.row == coo.col))
    a = np.asarray(a)
    return not np.any(a - np.diag(np.diag(a)))


def _diag(a) -> np.ndarray:
    return np.asarray(a.diagonal() if sp.issparse(a) else np.diag(a), dtype=complex)


class LindbladGenerator:
    """Right-hand side ``d rho/dt = -i[H, rho] + sum_k r_k D(L_k) rho``.

    Diagonal pieces (a diagonal H, the anticommutator term when it is
    diagonal, sandwiches of diagonal jump operators) collapse into one
    elementwise factor; the rest go through sparse products.
    """

    def __init__(self, spec: LindbladSpec):
        dim = spec.dim
        self.dim = dim
        h = spec.hamiltonian
        k_sum = sp.csr_matrix((dim, dim), dtype=complex)
        jumps = []
        for op, rate in spec.channels:
            if rate == 0:
                continue
            op = sp.csr_matrix(op, dtype=complex)
            k_sum = k_sum + rate * (op.conj().T @ op)
            jumps.append((rate, op))

        elementwise = np.zeros((dim, dim), dtype=complex)
        self.h = None
        if _is_diagonal(h):
            hd = _diag(h)
            elementwise += -1j * (hd[:, None] - hd[None, :])
        else:
            self.h = sp.csr_matrix(h, dtype=complex)
        self.k = None
        if _is_diagonal(k_sum):
            kd = _diag(k_sum)
            elementwise += -0.5 * (kd[:, None] + kd[None, :])
        else:
            self.k = k_sum.tocsr()
        self.sandwiches = []
        for rate, op in jumps:
            if _is_diagonal(op):
                ld = _diag(op)
                elementwise += rate * (ld[:, None] * ld.conj()[None, :])
            else:
                self.sandwiches.append((rate, op, op.conj().T.tocsr()))
        self.elementwise = elementwise if np.any(elementwise) else None

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = (self.elementwise * rho if self.elementwise is not None
               else np.zeros_like(rho))
        if self.h is not None:
            hr = self.h @ rho
            out += -1j * (hr - hr.conj().T)  # H rho - rho H for Hermitian rho
        if self.k is not None:
            kr = self.k @ rho
            out -= 0.5 * (kr + kr.conj().T)
        for rate, op, op_dag in self.sandwiches:
            out += rate * ((op @ rho) @ op_dag)
        return out

    def __call__(self, t, y):
        return self.apply(y.reshape(self.dim, self.dim)).ravel()


def observable_operators(ops: DickeOperators) -> dict:
    """Sparse operators for the first and second spin moments."""
    jx, jy, jz = (sp.csr_matrix(o) for o in (ops.jx, ops.jy, ops.jz))
    return {
        "jx": jx, "jy": jy, "jz": jz,
        "jx2": jx @ jx, "jy2": jy @ jy, "jz2": jz @ jz,
        "jxy": 0.5 * (jx @ jy + jy @ jx),
        "jxz": 0.5 * (jx @ jz + jz @ jx),
        "jyz": 0.5 * (jy @ jz + jz @ jy),
    }


def _expect(op, rho) -> complex:
    if sp.issparse(op):
        return complex(op.multiply(rho.T).sum())
    return complex(np.einsum("ij,ji->", op, rho))


def evolve_lindblad(spec: LindbladSpec, rho0, times, *, rtol: float = 1e-8,
                    atol: float = 1e-10, method: str = "DOP853", store_states: bool = True,
                    observables: dict | None = None) -> Trajectory:
    """Integrate the master equation and sample it at ``times``.

    ``rho0`` is taken to be the state at ``times[0]``. With
    ``store_states=False`` only the expectations of ``observables`` and the
    invariant monitors are kept.
    """
    times = check_times(times)
    rho0 = DensityMatrix.from_state(rho0)
    if rho0.dim != spec.dim:
        raise ValueError(f"state dimension {rho0.dim} does not match spec dimension {spec.dim}")
    gen = LindbladGenerator(spec)
    dim = spec.dim
    n = times.size
    observables = observables or {}
    states = np.empty((n, dim, dim), dtype=complex) if store_states else None
    traj = Trajectory(
        times=times,
        states=states,
        expectations={name: np.empty(n, dtype=complex) for name in observables},
        trace_drift=np.empty(n),
        hermiticity_error=np.empty(n),
        min_eigenvalue=np.empty(n),
    )

    def record(k, y):
        rho = y.reshape(dim, dim)
        if store_states:
            states[k] = rho
        for name, op in observables.items():
            traj.expectations[name][k] = _expect(op, rho)
        herm = 0.5 * (rho + rho.conj().T)
        traj.trace_drift[k] = abs(np.trace(rho) - 1.0)
        traj.hermiticity_error[k] = np.max(np.abs(rho - rho.conj().T))
        traj.min_eigenvalue[k] = np.linalg.eigvalsh(herm)[0]

    try:
        traj.n_steps = integrate(gen, rho0.elements.ravel().copy(), times, record, rtol, atol, method)
    except IntegrationError:
        log.error("Lindblad integration failed for dim %d", dim)
        raise
    _flag_invariants(traj)
    return traj


def _flag_invariants(traj: Trajectory) -> None:
    checks = (
        (traj.trace_drift, lambda v: v > TRACE_TOL, "trace drift"),
        (traj.hermiticity_error, lambda v: v > HERMITICITY_TOL, "Hermiticity error"),
        (traj.min_eigenvalue, lambda v: v < POSITIVITY_TOL, "negative eigenvalue"),
    )
    for values, bad, what in checks:
        idx = np.flatnonzero(bad(values))
        if idx.size:
            k = idx[0]
            msg = f"{what} {values[k]:.3g} at t = {traj.times[k]:.6g} s ({idx.size} output times)"
            traj.warnings.append(msg)
            log.warning(msg)


def make_oat_spec(budget=None, *, n_spins: int | None = None, lambda_twist: float | None = None,
                  gamma_s: float = 0.0, big_gamma_m: float = 0.0, n_th: float = 0.0,
                  include_linear: bool = False, detuning: float | None = None,
                  ops: DickeOperators | None = None) -> LindbladSpec:
    """Effective twisting master equation on the Dicke subspace.

    ``H = -lambda J_z^2`` with channels ``gamma_s D[J_z]``,
    ``(n_th + 1) Gamma_m D[J_-]`` and ``n_th Gamma_m D[J_+]``. The z-rotation
    ``(Delta + lambda) J_z`` is dropped unless ``include_linear`` is set (it
    then needs ``detuning``). A budget supplies every parameter at once.
    """
    if budget is not None:
        n_spins = budget.n_spins
        lambda_twist = budget.lambda_twist
        gamma_s = budget.gamma_s_dephase
        big_gamma_m = budget.big_gamma_m
        n_th = budget.n_th
        detuning = budget.detuning if detuning is None else detuning
    if n_spins is None or lambda_twist is None:
        raise ValueError("need a budget or both n_spins and lambda_twist")
    for name, v in (("lambda_twist", lambda_twist), ("gamma_s", gamma_s),
                    ("big_gamma_m", big_gamma_m), ("n_th", n_th)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
    if gamma_s < 0 or big_gamma_m < 0 or n_th < 0:
        raise ValueError("rates and n_th must be non-negative")
    if ops is None:
        ops = build_dicke_operators(n_spins, sparse=True)
    m = ops.m
    h_diag = -lambda_twist * m**2
    if include_linear:
        if detuning is None:
            raise ValueError("include_linear needs the detuning")
        h_diag = h_diag + (detuning + lambda_twist) * m
    hamiltonian = sp.diags(h_diag.astype(complex), 0, format="csr")
    channels, labels = [], []
    if gamma_s > 0:
        channels.append((sp.csr_matrix(ops.jz), gamma_s))
        labels.append("dephasing D[Jz]")
    if big_gamma_m > 0:
        channels.append((sp.csr_matrix(ops.j_minus), (n_th + 1) * big_gamma_m))
        labels.append("emission D[J-]")
        channels.append((sp.csr_matrix(ops.j_plus), n_th * big_gamma_m))
        labels.append("absorption D[J+]")
    return LindbladSpec(hamiltonian, channels, labels)


# state metrics ---------------------------------------------------------------

def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray, squared: bool = False) -> float:
    """Uhlmann fidelity ``tr sqrt(sqrt(rho) sigma sqrt(rho))``.

    This is the root convention; ``squared=True`` returns its square, which
    equals ``|<psi|phi>|^2`` for pure states.
    """
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(0.5 * (s @ sigma @ s + (s @ sigma @ s).conj().T))
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return f * f if squared else f


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


# Tavis-Cummings --------------------------------------------------------------

def phonon_operators(n_phonon_max: int) -> np.ndarray:
    """Truncated annihilation operator on n = 0 .. n_phonon_max."""
    return np.diag(np.sqrt(np.arange(1, n_phonon_max + 1, dtype=float)), 1).astype(complex)


def _phonon_density(phonon_state0) -> np.ndarray:
    if phonon_state0 is None:
        phonon_state0 = 0
    if isinstance(phonon_state0, (int, np.integer)):
        rho = np.zeros((phonon_state0 + 1, phonon_state0 + 1), dtype=complex)
        rho[phonon_state0, phonon_state0] = 1.0
        return rho
    arr = np.asarray(phonon_state0, dtype=complex)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    return arr


def choose_phonon_cutoff(populations, guard: int = 2, tol: float = TRUNCATION_TOL) -> int:
    """Smallest n_max whose initial tail is below ``tol``, plus guard levels."""
    pops = np.asarray(populations, dtype=float)
    tails = np.concatenate([np.cumsum(pops[::-1])[::-1][1:], [0.0]])  # P(n > k)
    n = int(np.argmax(tails < tol))
    return n + guard


def _fit_phonon_state(rho_ph: np.ndarray, n_phonon_max: int) -> np.ndarray:
    dim = n_phonon_max + 1
    pops = np.real(np.diag(rho_ph))
    tail = float(np.sum(pops[dim:]))
    if tail > TRUNCATION_TOL:
        raise TruncationError(
            f"initial phonon population above n_max = {n_phonon_max} is {tail:.2e}; "
            f"increase n_phonon_max to at least {choose_phonon_cutoff(pops)}")
    out = np.zeros((dim, dim), dtype=complex)
    k = min(dim, rho_ph.shape[0])
    out[:k, :k] = rho_ph[:k, :k]
    return out / np.trace(out)


def tavis_cummings_hamiltonian(ops: DickeOperators, g_e: float, detuning: float,
                               n_phonon_max: int):
    """``Delta J_z + g_e (b^dag J_- + b J_+)`` on spin (x) phonon."""
    b = sp.csr_matrix(phonon_operators(n_phonon_max))
    i_ph = sp.identity(n_phonon_max + 1, dtype=complex, format="csr")
    jz, jp, jm = (sp.csr_matrix(o) for o in (ops.jz, ops.j_plus, ops.j_minus))
    h = detuning * sp.kron(jz, i_ph) + g_e * (sp.kron(jm, b.conj().T) + sp.kron(jp, b))
    return h.tocsr()


def partial_trace_phonon(rho: np.ndarray, spin_dim: int, phonon_dim: int) -> np.ndarray:
    r = rho.reshape(spin_dim, phonon_dim, spin_dim, phonon_dim)
    return np.einsum("ajbj->ab", r)


@dataclass
class TavisCummingsResult:
    joint: Trajectory
    spin: Trajectory
    phonon_number: np.ndarray
    excitation_number: np.ndarray
    top_level_population: np.ndarray
    dispersive_ratio: float
    n_phonon_max: int


def evolve_tavis_cummings(n_spins: int, g_e: float, detuning: float, n_phonon_max: int,
                          spin_state0, phonon_state0=None, times=None, *, rtol: float = 1e-8,
                          atol: float = 1e-10, method: str = "DOP853") -> TavisCummingsResult:
    """Evolve the resonant-exchange spin-phonon model and trace out the phonon.

    ``phonon_state0`` may be None (vacuum), a Fock number, amplitudes or a
    density matrix on any number of levels; population beyond
    ``n_phonon_max`` must stay below 1e-8.
    """
    if times is None:
        raise ValueError("times are required")
    if n_phonon_max < 1:
        raise ValueError("n_phonon_max must be >= 1")
    ops = build_dicke_operators(n_spins)
    ds, dp = n_spins + 1, n_phonon_max + 1
    rho_s = DensityMatrix.from_state(spin_state0).elements
    if rho_s.shape[0] != ds:
        raise ValueError("spin state dimension does not match n_spins")
    rho_p = _fit_phonon_state(_phonon_density(phonon_state0), n_phonon_max)
    rho0 = np.kron(rho_s, rho_p)
    spec = LindbladSpec(tavis_cummings_hamiltonian(ops, g_e, detuning, n_phonon_max))
    joint = evolve_lindblad(spec, rho0, times, rtol=rtol, atol=atol, method=method)

    num = np.kron(np.eye(ds), np.diag(np.arange(dp, dtype=float)))
    exc = num + np.kron(np.diag(ops.m), np.eye(dp))
    top = np.kron(np.eye(ds), np.diag((np.arange(dp) == n_phonon_max).astype(float)))
    n_ph = np.array([np.real(_expect(num, r)) for r in joint.states])
    n_exc = np.array([np.real(_expect(exc, r)) for r in joint.states])
    p_top = np.array([np.real(_expect(top, r)) for r in joint.states])
    if np.max(p_top) > TRUNCATION_TOL:
        raise TruncationError(
            f"phonon population reached {np.max(p_top):.2e} in the top kept level; "
            "increase n_phonon_max")

    reduced = np.array([partial_trace_phonon(r, ds, dp) for r in joint.states])
    spin = Trajectory(
        times=joint.times,
        states=reduced,
        trace_drift=np.abs(np.einsum("kii->k", reduced) - 1.0),
        hermiticity_error=np.max(np.abs(reduced - reduced.conj().transpose(0, 2, 1)), axis=(1, 2)),
        min_eigenvalue=np.array([np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0] for r in reduced]),
        n_steps=joint.n_steps,
    )
    _flag_invariants(spin)
    ratio = abs(g_e / detuning) if detuning else math.inf
    return TavisCummingsResult(joint, spin, n_ph, n_exc, p_top, ratio, n_phonon_max)
