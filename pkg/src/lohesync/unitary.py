"""Discrete Lohe matrix models on U(d).

Three exponent factorizations of the same vector field ``-iH_i + kappa*Delta_i``:

* ``"A"`` Lie group integrator   ``exp(-iH_i h + beta Delta_i) U_i``
* ``"B"`` Lie-Trotter splitting  ``exp(-iH_i h) exp(beta Delta_i) U_i``
* ``"C"`` Strang splitting       ``exp(-iH_i h/2) exp(beta Delta_i) exp(-iH_i h/2) U_i``

with ``beta = kappa*h`` and ``Delta_i = (U_c U_i^+ - U_i U_c^+)/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .linalg import dagger, expm_skew_hermitian, hermitian_defect, unitarity_defect

SCHEMES = ("A", "B", "C")
UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UnitaryEnsemble:
    matrices: np.ndarray
    hamiltonians: np.ndarray
    kappa: float
    h: float
    scheme: str = "A"

    def __post_init__(self):
        u = _frozen(self.matrices)
        if u.ndim != 3 or u.shape[1] != u.shape[2] or u.shape[0] < 1:
            raise ValueError(f"matrices must have shape (N, d, d), got {u.shape}")
        hs = _frozen(self.hamiltonians)
        if hs.shape != u.shape:
            raise ValueError(f"hamiltonians must have shape {u.shape}, got {hs.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(hs))):
            raise ValueError("ensemble contains non-finite values")
        d = u.shape[1]
        defect = np.max(unitarity_defect(u))
        if defect > UNITARY_TOL * d:
            raise ValueError(f"matrices must be unitary (defect {defect:.3e})")
        hdef = np.max(hermitian_defect(hs))
        if hdef > HERMITIAN_TOL:
            raise ValueError(f"hamiltonians must be Hermitian (defect {hdef:.3e})")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")
        if not self.h > 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "matrices", u)
        object.__setattr__(self, "hamiltonians", hs)
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "h", float(self.h))

    @property
    def n_agents(self) -> int:
        return self.matrices.shape[0]

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def beta(self) -> float:
        return self.kappa * self.h

    @classmethod
    def homogeneous(cls, matrices, kappa: float, h: float, scheme: str = "A") -> "UnitaryEnsemble":
        matrices = np.asarray(matrices, dtype=np.complex128)
        return cls(matrices, np.zeros_like(matrices), kappa, h, scheme)

    def with_matrices(self, matrices) -> "UnitaryEnsemble":
        return replace(self, matrices=matrices)

    def right_translate(self, left: np.ndarray) -> "UnitaryEnsemble":
        return self.with_matrices(self.matrices @ left)


@dataclass(frozen=True)
class MatrixDiagnostics:
    step_index: int
    diameter_u: float
    diameter_h: float
    unitarity_defect: float
    beta: float


def mean_state(u: np.ndarray) -> np.ndarray:
    total = np.zeros(u.shape[1:], dtype=np.complex128)
    for ui in u:
        total = total + ui
    return total / u.shape[0]


def coupling_deltas(u: np.ndarray) -> np.ndarray:
    """Delta_i for every agent, shape (N, d, d)."""
    uc = mean_state(u)
    a = uc[None, :, :] @ dagger(u)
    return 0.5 * (a - dagger(a))


def coupling_delta(ens: UnitaryEnsemble, i: int) -> np.ndarray:
    return coupling_deltas(ens.matrices)[i]


def free_flow(hamiltonians: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) for every Hamiltonian in the stack."""
    return expm_skew_hermitian(-1j * t * hamiltonians)


def dlm_step(ens: UnitaryEnsemble) -> UnitaryEnsemble:
    u = ens.matrices
    coupling = ens.beta * coupling_deltas(u)
    if ens.scheme == "A":
        nxt = expm_skew_hermitian(-1j * ens.h * ens.hamiltonians + coupling) @ u
    elif ens.scheme == "B":
        nxt = free_flow(ens.hamiltonians, ens.h) @ (expm_skew_hermitian(coupling) @ u)
    else:
        half = free_flow(ens.hamiltonians, 0.5 * ens.h)
        nxt = half @ (expm_skew_hermitian(coupling) @ (half @ u))
    return ens.with_matrices(nxt)


def strang_intermediate(ens: UnitaryEnsemble) -> np.ndarray:
    """V_i = exp(-iH_i h/2) U_i, the half-shifted state used to analyse scheme C."""
    return free_flow(ens.hamiltonians, 0.5 * ens.h) @ ens.matrices


def _pairwise_max(x: np.ndarray) -> float:
    diff = x[:, None] - x[None, :]
    return float(np.sqrt(np.max(np.sum(np.abs(diff) ** 2, axis=(-2, -1)))))


def matrix_diameter(ens_or_stack) -> float:
    u = ens_or_stack.matrices if isinstance(ens_or_stack, UnitaryEnsemble) else np.asarray(ens_or_stack)
    return _pairwise_max(u)


def hamiltonian_diameter(ens_or_stack) -> float:
    hs = ens_or_stack.hamiltonians if isinstance(ens_or_stack, UnitaryEnsemble) else np.asarray(ens_or_stack)
    return _pairwise_max(hs)


def relative_positions(u: np.ndarray) -> np.ndarray:
    """Array R with R[i, j] = U_i U_j^+."""
    return np.einsum("iab,jcb->ijac", u, np.conj(u))


def relative_position_distance(ens, ens2) -> float:
    """max_{i,j} ||U_i U_j^+ - V_i V_j^+||_F."""
    u = ens.matrices if isinstance(ens, UnitaryEnsemble) else np.asarray(ens)
    v = ens2.matrices if isinstance(ens2, UnitaryEnsemble) else np.asarray(ens2)
    if u.shape != v.shape:
        raise ValueError(f"ensemble shapes differ: {u.shape} vs {v.shape}")
    diff = relative_positions(u) - relative_positions(v)
    return float(np.sqrt(np.max(np.sum(np.abs(diff) ** 2, axis=(-2, -1)))))


def matrix_diagnostics(ens: UnitaryEnsemble, step_index: int = 0) -> MatrixDiagnostics:
    return MatrixDiagnostics(
        step_index=step_index,
        diameter_u=matrix_diameter(ens),
        diameter_h=hamiltonian_diameter(ens),
        unitarity_defect=float(np.max(unitarity_defect(ens.matrices))),
        beta=ens.beta,
    )


def phase_ensemble(thetas, nus, kappa: float, h: float, scheme: str = "A") -> UnitaryEnsemble:
    """d = 1 ensemble with U_i = exp(-i theta_i), H_i = nu_i."""
    thetas = np.asarray(thetas, dtype=np.float64)
    nus = np.asarray(nus, dtype=np.float64)
    u = np.exp(-1j * thetas)[:, None, None]
    hs = nus.astype(np.complex128)[:, None, None]
    return UnitaryEnsemble(u, hs, kappa, h, scheme)


def dlm_a_kuramoto_reduction(thetas, nus, kappa: float, h: float, steps: int = 1) -> float:
    """Max angular gap between d=1 scheme A and forward-Euler Kuramoto after ``steps``."""
    from .sphere import kuramoto_step, wrap_angle

    ens = phase_ensemble(thetas, nus, kappa, h, "A")
    th = np.asarray(thetas, dtype=np.float64)
    worst = 0.0
    for _ in range(steps):
        ens = dlm_step(ens)
        th = kuramoto_step(th, nus, kappa, h, variant="linear")
        phases = -np.angle(ens.matrices[:, 0, 0])
        worst = max(worst, float(np.max(np.abs(wrap_angle(phases - th)))))
    return worst


@dataclass(frozen=True)
class LockingResult:
    locked: bool
    window_increment: float
    limits: np.ndarray


def state_locking_detector(history: Sequence, window: int, tol: float) -> LockingResult:
    """Heuristic locking test on a trajectory of ensembles (or (N,d,d) stacks).

    Sums the per-step sup-increment of the relative positions over the last
    ``window`` steps; locked when that sum is below ``tol``.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if len(history) < window:
        raise ValueError(f"history has {len(history)} entries, need at least {window}")
    stacks = [e.matrices if isinstance(e, UnitaryEnsemble) else np.asarray(e) for e in history[-window:]]
    rel = [relative_positions(u) for u in stacks]
    total = 0.0
    for prev, cur in zip(rel[:-1], rel[1:]):
        total += float(np.sqrt(np.max(np.sum(np.abs(cur - prev) ** 2, axis=(-2, -1)))))
    return LockingResult(total < tol, total, rel[-1])


def evolve(ens: UnitaryEnsemble, steps: int, keep_history: bool = False):
    """Advance ``steps`` steps; returns the final ensemble, or the full trajectory."""
    history = [ens] if keep_history else None
    for _ in range(steps):
        ens = dlm_step(ens)
        if keep_history:
            history.append(ens)
    return history if keep_history else ens
