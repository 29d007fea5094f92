"""Discrete swarm-sphere model (Euler predictor + radial corrector) and its S^1 reduction."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

UNIT_TOL = 1e-10
SKEW_TOL = 1e-12


class StepRejected(ArithmeticError):
    """A step produced a zero or non-finite intermediate state."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SphereEnsemble:
    """N points on S^{d-1} with per-agent skew-symmetric rotation generators."""

    points: np.ndarray
    omegas: np.ndarray
    kappa: float
    h: float

    def __post_init__(self):
        points = _frozen(self.points)
        if points.ndim != 2 or points.shape[1] < 2 or points.shape[0] < 1:
            raise ValueError(f"points must have shape (N, d) with d >= 2, got {points.shape}")
        n, d = points.shape
        omegas = _frozen(self.omegas)
        if omegas.shape != (n, d, d):
            raise ValueError(f"omegas must have shape {(n, d, d)}, got {omegas.shape}")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(omegas))):
            raise ValueError("ensemble contains non-finite values")
        norms = np.linalg.norm(points, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ValueError(f"points must be unit vectors (max defect {np.max(np.abs(norms - 1)):.3e})")
        skew = np.sqrt(np.sum((omegas + np.swapaxes(omegas, 1, 2)) ** 2, axis=(1, 2)))
        if np.any(skew > SKEW_TOL):
            raise ValueError(f"omegas must be skew-symmetric (max defect {np.max(skew):.3e})")
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")
        if not self.h > 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "h", float(self.h))

    @property
    def n_agents(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def beta(self) -> float:
        return self.kappa * self.h

    @classmethod
    def homogeneous(cls, points, kappa: float, h: float) -> "SphereEnsemble":
        points = np.asarray(points, dtype=np.float64)
        n, d = points.shape
        return cls(points, np.zeros((n, d, d)), kappa, h)

    def with_points(self, points) -> "SphereEnsemble":
        return replace(self, points=points)


@dataclass(frozen=True)
class SphereDiagnostics:
    step_index: int
    rho: float
    min_pair_inner: float
    min_center_inner: float
    diameter: float
    unit_defect: float = field(default=0.0)


def centroid(points: np.ndarray) -> np.ndarray:
    # explicit left-to-right sum keeps the reduction order fixed
    total = np.zeros(points.shape[1])
    for x in points:
        total = total + x
    return total / points.shape[0]


def sphere_predictor(ens: SphereEnsemble) -> np.ndarray:
    x = ens.points
    xc = centroid(x)
    along = x @ xc
    drift = np.einsum("nij,nj->ni", ens.omegas, x)
    return x + ens.h * drift + ens.beta * (xc[None, :] - along[:, None] * x)


def sphere_step(ens: SphereEnsemble) -> SphereEnsemble:
    """One predictor-corrector step; every agent uses the step-n centroid."""
    with np.errstate(over="ignore", invalid="ignore"):
        pred = sphere_predictor(ens)
        norms = np.linalg.norm(pred, axis=1)
    bad = np.flatnonzero(~np.isfinite(norms) | (norms == 0.0))
    if bad.size:
        i = int(bad[0])
        raise StepRejected(f"predictor for agent {i} is zero or non-finite", i)
    return ens.with_points(pred / norms[:, None])


def sphere_inner_product_closed_form(ens: SphereEnsemble, i: int, j: int) -> float:
    """<x_i(n+1), x_j(n+1)> from step-n quantities, for the zero-rotation model."""
    if np.any(ens.omegas != 0.0):
        raise ValueError("closed form only holds when every rotation generator is zero")
    x = ens.points
    xc = centroid(x)
    rho = float(np.linalg.norm(xc))
    bij = float(x[i] @ x[j])
    if rho == 0.0:
        return bij
    xhat = xc / rho
    ai = float(x[i] @ xhat)
    aj = float(x[j] @ xhat)
    g = ens.beta * rho
    num = bij + g * (ai + aj) * (1.0 - bij) + g * g * (1.0 - ai * ai - aj * aj + ai * aj * bij)
    den = np.sqrt(1.0 + g * g * (1.0 - ai * ai)) * np.sqrt(1.0 + g * g * (1.0 - aj * aj))
    return float(num / den)


def pair_inner_products(points: np.ndarray) -> np.ndarray:
    return points @ points.T


def diameter(points: np.ndarray) -> float:
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff**2, axis=-1))))


def sphere_diagnostics(ens: SphereEnsemble, step_index: int = 0) -> SphereDiagnostics:
    x = ens.points
    xc = centroid(x)
    gram = pair_inner_products(x)
    return SphereDiagnostics(
        step_index=step_index,
        rho=float(np.linalg.norm(xc)),
        min_pair_inner=float(np.min(gram)),
        min_center_inner=float(np.min(x @ xc)),
        diameter=diameter(x),
        unit_defect=float(np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0))),
    )


# --- S^1 / Kuramoto reduction -------------------------------------------------


def kuramoto_step(thetas, nus, kappa: float, h: float, variant: str = "arctan") -> np.ndarray:
    """Discrete Kuramoto update.

    ``variant="arctan"`` is the exact image of the sphere scheme on S^1;
    ``variant="linear"`` drops the arctan (forward-Euler Kuramoto).
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    nus = np.asarray(nus, dtype=np.float64)
    n = thetas.shape[0]
    coupling = np.sin(thetas[None, :] - thetas[:, None]).sum(axis=1)
    incr = nus * h + (kappa * h / n) * coupling
    if variant == "arctan":
        return thetas + np.arctan(incr)
    if variant == "linear":
        return thetas + incr
    raise ValueError(f"unknown Kuramoto variant {variant!r}")


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    a = np.asarray(a, dtype=np.float64)
    out = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


def circle_ensemble(thetas, nus, kappa: float, h: float) -> SphereEnsemble:
    thetas = np.asarray(thetas, dtype=np.float64)
    nus = np.asarray(nus, dtype=np.float64)
    points = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    omegas = np.zeros((len(thetas), 2, 2))
    omegas[:, 0, 1] = -nus
    omegas[:, 1, 0] = nus
    return SphereEnsemble(points, omegas, kappa, h)


def sphere_to_kuramoto_roundtrip(thetas, nus, kappa: float, h: float, steps: int = 1) -> float:
    """Max angular gap between the sphere scheme on S^1 and arctan-Kuramoto after ``steps``."""
    ens = circle_ensemble(thetas, nus, kappa, h)
    th = np.asarray(thetas, dtype=np.float64)
    worst = 0.0
    for _ in range(steps):
        ens = sphere_step(ens)
        th = kuramoto_step(th, nus, kappa, h, variant="arctan")
        angles = np.arctan2(ens.points[:, 1], ens.points[:, 0])
        worst = max(worst, float(np.max(np.abs(wrap_angle(angles - th)))))
    return worst
