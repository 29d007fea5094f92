"""Seeded experiment execution: ensemble construction, stepping, diagnostics and artifacts."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .config import ConfigError, ExperimentConfig
from .continuous import ContinuousRunConfig, continuous_evolve
from .linalg import (
    EigensolverError,
    SingularMatrixError,
    StructureError,
    expm_skew_hermitian,
    random_hermitian,
    random_hermitian_zero_trace_sum,
    random_unit_vector,
    random_unitary,
    unitarity_defect,
)
from .sphere import SphereEnsemble, StepRejected, kuramoto_step, sphere_diagnostics, sphere_step
from .thresholds import FrameworkInputs, FrameworkReport, check_framework
from .unitary import (
    UnitaryEnsemble,
    dlm_step,
    hamiltonian_diameter,
    matrix_diameter,
    relative_position_distance,
)

NUMERICAL_ERRORS = (StepRejected, StructureError, SingularMatrixError, EigensolverError, ArithmeticError)


# --- phase ensemble for the Kuramoto model --------------------------------------


@dataclass(frozen=True)
class PhaseEnsemble:
    thetas: np.ndarray
    nus: np.ndarray
    kappa: float
    h: float

    @property
    def n_agents(self) -> int:
        return self.thetas.shape[0]


def phase_diagnostics(thetas: np.ndarray) -> tuple[float, float, float]:
    """(chord diameter, order parameter, min pairwise cosine) of phases on the circle."""
    z = np.exp(1j * thetas)
    chord = np.abs(z[:, None] - z[None, :])
    cosines = np.cos(thetas[:, None] - thetas[None, :])
    return float(np.max(chord)), float(np.abs(np.mean(z))), float(np.min(cosines))


# --- construction from a config ------------------------------------------------


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    init_seq, ham_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(ham_seq)


def _read_json(path: Path, key: str, field_name: str):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(field_name, f"cannot load {path}: {exc}") from exc
    if not isinstance(data, dict) or key not in data:
        raise ConfigError(field_name, f"{path} must be a JSON object with key {key!r}")
    return data[key]


def _complex_array(nested, field_name: str) -> np.ndarray:
    arr = np.asarray(nested, dtype=np.float64)
    if arr.shape[-1:] != (2,):
        raise ConfigError(field_name, "matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _check_shape(arr: np.ndarray, shape: tuple, field_name: str) -> np.ndarray:
    if arr.shape != shape:
        raise ConfigError(field_name, f"expected shape {shape}, got {arr.shape}")
    return arr


def _scale_to_diameter(stack: np.ndarray, target: float, diam: Callable) -> np.ndarray:
    current = diam(stack)
    return stack * (target / current) if current > 0 else np.zeros_like(stack)


def _sphere_points(cfg: ExperimentConfig, rng) -> np.ndarray:
    d, n = cfg.d, cfg.N
    kind = cfg.init.kind
    if kind == "explicit":
        pts = np.asarray(_read_json(cfg.init.file, "points", "init.file"), dtype=np.float64)
        return _check_shape(pts, (n, d), "init.file")
    if kind == "random":
        return np.array([random_unit_vector(d, rng) for _ in range(n)])
    base = random_unit_vector(d, rng)
    if kind == "consensus":
        return np.tile(base, (n, 1))
    out = []
    for _ in range(n):
        g = rng.standard_normal(d)
        g -= (g @ base) * base
        t = g / np.linalg.norm(g)
        a = cfg.init.radius * rng.uniform()
        out.append(np.cos(a) * base + np.sin(a) * t)
    return np.array(out)


def _unitaries(cfg: ExperimentConfig, rng) -> np.ndarray:
    d, n = cfg.d, cfg.N
    kind = cfg.init.kind
    if kind == "explicit":
        mats = _complex_array(_read_json(cfg.init.file, "matrices", "init.file"), "init.file")
        return _check_shape(mats, (n, d, d), "init.file")
    if kind == "random":
        return np.array([random_unitary(d, rng) for _ in range(n)])
    base = random_unitary(d, rng)
    if kind == "consensus":
        return np.tile(base, (n, 1, 1))
    out = []
    for _ in range(n):
        g = random_hermitian(d, rng)
        g /= np.linalg.norm(g)
        out.append(expm_skew_hermitian(1j * cfg.init.radius * rng.uniform() * g) @ base)
    return np.array(out)


def _phases(cfg: ExperimentConfig, rng) -> np.ndarray:
    n = cfg.N
    kind = cfg.init.kind
    if kind == "explicit":
        th = np.asarray(_read_json(cfg.init.file, "thetas", "init.file"), dtype=np.float64)
        return _check_shape(th, (n,), "init.file")
    if kind == "random":
        return rng.uniform(-np.pi, np.pi, n)
    base = rng.uniform(-np.pi, np.pi)
    if kind == "consensus":
        return np.full(n, base)
    return base + cfg.init.radius * rng.uniform(-1.0, 1.0, n)


def _sphere_rotations(cfg: ExperimentConfig, rng) -> np.ndarray:
    d, n = cfg.d, cfg.N
    kind = cfg.hamiltonians.kind
    if kind == "zero":
        return np.zeros((n, d, d))
    if kind == "explicit":
        om = np.asarray(_read_json(cfg.hamiltonians.file, "omegas", "hamiltonians.file"), dtype=np.float64)
        return _check_shape(om, (n, d, d), "hamiltonians.file")
    a = rng.standard_normal((n, d, d))
    om = 0.5 * (a - np.swapaxes(a, 1, 2))
    om -= om.mean(axis=0, keepdims=True)
    return _scale_to_diameter(om, cfg.hamiltonians.scale, matrix_diameter)


def _hamiltonians(cfg: ExperimentConfig, rng) -> np.ndarray:
    d, n = cfg.d, cfg.N
    kind = cfg.hamiltonians.kind
    if kind == "zero":
        return np.zeros((n, d, d), dtype=np.complex128)
    if kind == "explicit":
        hs = _complex_array(_read_json(cfg.hamiltonians.file, "hamiltonians", "hamiltonians.file"), "hamiltonians.file")
        return _check_shape(hs, (n, d, d), "hamiltonians.file")
    hs = random_hermitian_zero_trace_sum(d, n, rng)
    return _scale_to_diameter(hs, cfg.hamiltonians.scale, hamiltonian_diameter)


def _frequencies(cfg: ExperimentConfig, rng) -> np.ndarray:
    n = cfg.N
    kind = cfg.hamiltonians.kind
    if kind == "zero":
        return np.zeros(n)
    if kind == "explicit":
        nus = np.asarray(_read_json(cfg.hamiltonians.file, "frequencies", "hamiltonians.file"), dtype=np.float64)
        return _check_shape(nus, (n,), "hamiltonians.file")
    nus = rng.standard_normal(n)
    nus -= nus.mean()
    spread = nus.max() - nus.min()
    return nus * (cfg.hamiltonians.scale / spread) if spread > 0 else np.zeros(n)


def build_ensemble(cfg: ExperimentConfig, init_seed: int | None = None):
    """Initial ensemble for ``cfg``; ``init_seed`` overrides the seed of the initial data only."""
    init_rng, ham_rng = _streams(cfg.seed)
    if init_seed is not None:
        init_rng, _ = _streams(init_seed)
    try:
        if cfg.model == "kuramoto":
            return PhaseEnsemble(_phases(cfg, init_rng), _frequencies(cfg, ham_rng), cfg.kappa, cfg.h)
        if cfg.is_sphere:
            return SphereEnsemble(_sphere_points(cfg, init_rng), _sphere_rotations(cfg, ham_rng), cfg.kappa, cfg.h)
        return UnitaryEnsemble(_unitaries(cfg, init_rng), _hamiltonians(cfg, ham_rng), cfg.kappa, cfg.h, cfg.scheme)
    except ConfigError:
        raise
    except ValueError as exc:
        field_name = "init" if "matri" in str(exc) or "point" in str(exc) else "hamiltonians"
        raise ConfigError(field_name, str(exc)) from exc


def step_function(cfg: ExperimentConfig) -> Callable:
    if cfg.model == "kuramoto":
        def step(ens):
            return PhaseEnsemble(kuramoto_step(ens.thetas, ens.nus, ens.kappa, ens.h), ens.nus, ens.kappa, ens.h)
        return step
    if cfg.model == "sphere":
        return sphere_step
    if cfg.model.startswith("continuous-"):
        run_cfg = ContinuousRunConfig(substeps_per_h=cfg.substeps_per_h)

        def step(ens):
            return continuous_evolve(ens, ens.h, run_cfg)
        return step
    return dlm_step


# --- diagnostics ------------------------------------------------------------------


def diagnostics_columns(cfg: ExperimentConfig, paired: bool = False) -> tuple[str, ...]:
    """Column set of the diagnostics CSV; depends on model kind only."""
    if paired:
        return ("n", "diameter", "diameter_tilde", "unitarity_defect", "relative_distance", "wall_clock_ns")
    if cfg.is_matrix:
        return ("n", "diameter", "unitarity_defect", "wall_clock_ns")
    return ("n", "diameter", "rho", "min_pair_inner", "wall_clock_ns")


def diagnostics_values(ens) -> tuple[float, ...]:
    if isinstance(ens, PhaseEnsemble):
        return phase_diagnostics(ens.thetas)
    if isinstance(ens, SphereEnsemble):
        diag = sphere_diagnostics(ens)
        return diag.diameter, diag.rho, diag.min_pair_inner
    return matrix_diameter(ens), float(np.max(unitarity_defect(ens.matrices)))


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _csv_line(values) -> str:
    return ",".join(str(v) if isinstance(v, (int, np.integer)) else format_float(v) for v in values) + "\n"


# --- framework report for a run -----------------------------------------------------


def framework_for(cfg: ExperimentConfig, ens, tilde=None) -> FrameworkReport | None:
    """Hypothesis report of the theorem that governs this run, if one applies.

    ``tilde`` is the second trajectory's initial ensemble in a paired run.
    """
    beta = cfg.kappa * cfg.h
    if cfg.model == "sphere":
        diag = sphere_diagnostics(ens)
        rot = float(np.max(np.abs(ens.omegas))) if ens.omegas.size else 0.0
        return check_framework(
            "T3.1", FrameworkInputs(beta=beta, min_pair_inner0=diag.min_pair_inner, rotation_norm=rot)
        )
    if not cfg.model.startswith("dlm-"):
        return None
    dh = hamiltonian_diameter(ens)
    d0 = matrix_diameter(ens)
    d0_tilde = matrix_diameter(tilde) if tilde is not None else None
    dh_k = dh / cfg.kappa if cfg.kappa > 0 else (0.0 if dh == 0 else float("inf"))
    if dh == 0:
        return check_framework("T5.1", FrameworkInputs(beta=beta, diameter0=d0, dh_over_kappa=0.0))
    if cfg.scheme == "B":
        theorem = "T6.2" if tilde is None else "T6.1"
        return check_framework(
            theorem, FrameworkInputs(beta=beta, diameter0=d0, diameter0_tilde=d0_tilde, dh_over_kappa=dh_k)
        )
    if cfg.scheme == "C":
        hsum = float(np.linalg.norm(np.sum(ens.hamiltonians, axis=0)))
        return check_framework(
            "T6.3",
            FrameworkInputs(
                beta=beta, diameter0=d0, diameter0_tilde=d0_tilde, dh_over_kappa=dh_k, h_sum_defect=hsum
            ),
        )
    return None


# --- runs -----------------------------------------------------------------------------


@dataclass
class RunResult:
    status: int  # 0 ok, 3 numerical failure
    rows: list[tuple] = field(default_factory=list)
    final: object = None
    report: FrameworkReport | None = None
    error: str | None = None
    artifacts: dict[str, Path] = field(default_factory=dict)


def state_json(ens) -> dict:
    if isinstance(ens, PhaseEnsemble):
        return {"thetas": ens.thetas.tolist(), "frequencies": ens.nus.tolist()}
    if isinstance(ens, SphereEnsemble):
        return {"points": ens.points.tolist(), "omegas": ens.omegas.tolist()}
    pairs = np.stack([ens.matrices.real, ens.matrices.imag], axis=-1)
    hpairs = np.stack([ens.hamiltonians.real, ens.hamiltonians.imag], axis=-1)
    return {"matrices": pairs.tolist(), "hamiltonians": hpairs.tolist()}


def _write_csv(path: Path, columns, rows, trailer: str | None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(_csv_line(row))
        if trailer is not None:
            fh.write(f"# FAILED {trailer}\n")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _timed(cfg: ExperimentConfig) -> Callable[[], int]:
    return time.perf_counter_ns if cfg.timing else (lambda: 0)


def run_experiment(cfg: ExperimentConfig, write: bool = True, prefix: str = "") -> RunResult:
    """Run ``cfg.steps`` steps, recording one diagnostics row per step (including n = 0)."""
    ens = build_ensemble(cfg)
    step = step_function(cfg)
    clock = _timed(cfg)
    result = RunResult(status=0, report=framework_for(cfg, ens))
    result.rows.append((0, *diagnostics_values(ens), 0))
    for n in range(1, cfg.steps + 1):
        t0 = clock()
        try:
            ens = step(ens)
        except NUMERICAL_ERRORS as exc:
            result.status = 3
            result.error = f"step {n}: {exc}"
            break
        elapsed = clock() - t0
        result.rows.append((n, *diagnostics_values(ens), elapsed))
    result.final = ens
    if write:
        _write_artifacts(cfg, result, diagnostics_columns(cfg), prefix)
    return result


def _write_artifacts(cfg: ExperimentConfig, result: RunResult, columns, prefix: str) -> None:
    out = cfg.output_dir
    if "diagnostics-csv" in cfg.outputs:
        path = out / f"{prefix}diagnostics.csv"
        _write_csv(path, columns, result.rows, result.error)
        result.artifacts["diagnostics-csv"] = path
    if "final-state-json" in cfg.outputs:
        path = out / f"{prefix}final_state.json"
        payload = {"model": cfg.model, "n": result.rows[-1][0], **state_json(result.final)}
        _write_json(path, payload)
        result.artifacts["final-state-json"] = path
    if "framework-report-json" in cfg.outputs:
        path = out / f"{prefix}framework_report.json"
        payload = result.report.to_dict() if result.report is not None else {"theorem_id": None, "applicable": False}
        _write_json(path, payload)
        result.artifacts["framework-report-json"] = path


_PAIR_MATCH = ("model", "d", "N", "kappa", "h")


def pair_run(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig, write: bool = True) -> RunResult:
    """Step two matrix ensembles in lockstep and record the relative-position distance.

    Both trajectories use config A's Hamiltonians and step count; the second
    trajectory takes its initial data from config B (its ``init`` and ``seed``).
    """
    for key in _PAIR_MATCH:
        if getattr(cfg_a, key) != getattr(cfg_b, key):
            raise ConfigError(key, f"paired configs differ ({getattr(cfg_a, key)!r} vs {getattr(cfg_b, key)!r})")
    if not cfg_a.is_matrix:
        raise ConfigError("model", "paired runs need a matrix model")
    ens_a = build_ensemble(cfg_a)
    ens_b0 = build_ensemble(cfg_b)
    ens_b = ens_a.with_matrices(ens_b0.matrices)
    step = step_function(cfg_a)
    clock = _timed(cfg_a)

    def row(n, a, b, elapsed):
        defect = max(float(np.max(unitarity_defect(a.matrices))), float(np.max(unitarity_defect(b.matrices))))
        return (n, matrix_diameter(a), matrix_diameter(b), defect, relative_position_distance(a, b), elapsed)

    result = RunResult(status=0, report=framework_for(cfg_a, ens_a, ens_b))
    result.rows.append(row(0, ens_a, ens_b, 0))
    for n in range(1, cfg_a.steps + 1):
        t0 = clock()
        try:
            ens_a, ens_b = step(ens_a), step(ens_b)
        except NUMERICAL_ERRORS as exc:
            result.status = 3
            result.error = f"step {n}: {exc}"
            break
        result.rows.append(row(n, ens_a, ens_b, clock() - t0))
    result.final = ens_a
    if write:
        _write_artifacts(cfg_a, result, diagnostics_columns(cfg_a, paired=True), "pair_")
    return result
