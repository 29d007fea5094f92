"""RK4 reference solvers for the continuous sphere and Lohe matrix flows."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import dagger, project_unitary
from .sphere import SphereEnsemble, centroid
from .thresholds import FrameworkInputs, check_framework
from .unitary import (
    UnitaryEnsemble,
    dlm_step,
    hamiltonian_diameter,
    matrix_diameter,
    mean_state,
    relative_position_distance,
)


@dataclass(frozen=True)
class ContinuousRunConfig:
    substeps_per_h: int = 100
    reproject_every: int = 1

    def __post_init__(self):
        for name in ("substeps_per_h", "reproject_every"):
            value = getattr(self, name)
            if not (isinstance(value, (int, np.integer)) and value >= 1):
                raise ValueError(f"{name} must be a positive integer, got {value!r}")


def _sphere_field(x: np.ndarray, omegas: np.ndarray, kappa: float) -> np.ndarray:
    xc = centroid(x)
    along = x @ xc
    return np.einsum("nij,nj->ni", omegas, x) + kappa * (xc[None, :] - along[:, None] * x)


def matrix_coefficients(u: np.ndarray, hamiltonians: np.ndarray, kappa: float) -> np.ndarray:
    """Skew-Hermitian generators -iH_i + kappa*Delta_i, shape (N, d, d)."""
    uc = mean_state(u)
    a = uc[None, :, :] @ dagger(u)
    return -1j * hamiltonians + 0.5 * kappa * (a - dagger(a))


def _matrix_field(u: np.ndarray, hamiltonians: np.ndarray, kappa: float) -> np.ndarray:
    return matrix_coefficients(u, hamiltonians, kappa) @ u


def continuous_sphere_rhs(ens: SphereEnsemble) -> np.ndarray:
    """Velocity of every agent under the continuous sphere flow, shape (N, d)."""
    return _sphere_field(ens.points, ens.omegas, ens.kappa)


def continuous_matrix_rhs(ens: UnitaryEnsemble) -> np.ndarray:
    """Velocity (-iH_i + kappa*Delta_i) U_i of every agent, shape (N, d, d)."""
    return _matrix_field(ens.matrices, ens.hamiltonians, ens.kappa)


def _rk4(state, field, dt: float, count: int, reproject, every: int):
    for k in range(1, count + 1):
        k1 = field(state)
        k2 = field(state + 0.5 * dt * k1)
        k3 = field(state + 0.5 * dt * k2)
        k4 = field(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % every == 0:
            state = reproject(state)
    return reproject(state)


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _advance_raw(ens, state, dt: float, count: int, every: int):
    if isinstance(ens, SphereEnsemble):
        def field(x):
            return _sphere_field(x, ens.omegas, ens.kappa)

        return _rk4(state, field, dt, count, _normalize_rows, every)

    def field(u):
        return _matrix_field(u, ens.hamiltonians, ens.kappa)

    return _rk4(state, field, dt, count, project_unitary, every)


def _state(ens):
    if isinstance(ens, SphereEnsemble):
        return ens.points
    if isinstance(ens, UnitaryEnsemble):
        return ens.matrices
    raise TypeError(f"unsupported ensemble type {type(ens).__name__}")


def _rebuild(ens, state):
    if isinstance(ens, SphereEnsemble):
        return ens.with_points(state)
    return ens.with_matrices(state)


def continuous_evolve(ens, total_time: float, config: ContinuousRunConfig | None = None):
    """Integrate the continuous flow for ``total_time`` with ``config.substeps_per_h`` RK4 substeps per h.

    Works for both ensemble types; the step size h of the ensemble only sets
    the substep count.  The state is projected back to the manifold every
    ``reproject_every`` substeps and once more at the end.
    """
    config = config or ContinuousRunConfig()
    if not (total_time >= 0 and math.isfinite(total_time)):
        raise ValueError("total_time must be finite and nonnegative")
    state = _state(ens)
    if total_time == 0:
        return ens
    periods = max(1, math.ceil(total_time / ens.h - 1e-9))
    count = periods * config.substeps_per_h
    out = _advance_raw(ens, np.array(state), total_time / count, count, config.reproject_every)
    return _rebuild(ens, out)


def continuous_trajectory(ens, steps: int, config: ContinuousRunConfig | None = None) -> list[np.ndarray]:
    """States of the continuous flow at times 0, h, 2h, ..., steps*h."""
    config = config or ContinuousRunConfig()
    dt = ens.h / config.substeps_per_h
    state = np.array(_state(ens))
    out = [state]
    for _ in range(steps):
        state = _advance_raw(ens, state, dt, config.substeps_per_h, config.reproject_every)
        out.append(state)
    return out


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    steps: int
    sup_distance: float
    warnings: tuple[str, ...] = ()


def uniform_convergence_experiment(
    ens: UnitaryEnsemble,
    scheme: str,
    h_values: Sequence[float],
    horizon_steps: int | Sequence[int],
    config: ContinuousRunConfig | None = None,
) -> list[ConvergenceRow]:
    """sup_n of the relative-position gap between the discrete scheme and the continuous flow, per h.

    ``ens`` fixes the initial data, the Hamiltonians and kappa; its own h is
    replaced by each entry of ``h_values``.  ``horizon_steps`` is either one
    step count for all h or one per h.
    """
    if not isinstance(ens, UnitaryEnsemble):
        raise TypeError("uniform convergence is measured on matrix ensembles")
    h_values = [float(h) for h in h_values]
    if any(b >= a for a, b in zip(h_values, h_values[1:])):
        raise ValueError("h values must be strictly decreasing")
    if isinstance(horizon_steps, (int, np.integer)):
        horizons = [int(horizon_steps)] * len(h_values)
    else:
        horizons = [int(s) for s in horizon_steps]
        if len(horizons) != len(h_values):
            raise ValueError("need one horizon per h value")
    config = config or ContinuousRunConfig()
    rows = []
    dh = hamiltonian_diameter(ens)
    d0 = matrix_diameter(ens)
    for h, steps in zip(h_values, horizons):
        run = UnitaryEnsemble(ens.matrices, ens.hamiltonians, ens.kappa, h, scheme)
        warnings = ()
        if ens.kappa > 0:
            report = check_framework(
                "T6.2", FrameworkInputs(beta=run.beta, diameter0=d0, dh_over_kappa=dh / ens.kappa)
            )
            if not report.satisfied:
                warnings = tuple(f"hypothesis violated: {c}" for c in report.failed_conditions())
        ref = continuous_trajectory(run, steps, config)
        worst = 0.0
        cur = run
        for n in range(1, steps + 1):
            cur = dlm_step(cur)
            worst = max(worst, relative_position_distance(cur.matrices, ref[n]))
        rows.append(ConvergenceRow(h, steps, worst, warnings))
    return rows
