"""Experiment configuration: YAML loading and field-by-field validation.

Schema (all keys at top level, unknown keys rejected)::

    model: sphere | dlm-a | dlm-b | dlm-c | kuramoto | continuous-sphere | continuous-matrix
    d: int >= 1          # 1 for kuramoto, >= 2 for sphere models
    N: int >= 1
    kappa: float >= 0
    h: float > 0
    steps: int >= 1
    seed: int in [0, 2**64)
    init: random | consensus | {kind: near-consensus, radius: r} | {kind: explicit, file: path}
    hamiltonians: zero | {kind: random-zero-sum, scale: s} | {kind: explicit, file: path}
    outputs: [diagnostics-csv, final-state-json, framework-report-json]
    output_dir: path     # default "out", relative to the config file
    substeps_per_h: int  # continuous models only, default 100
    timing: bool         # record wall-clock ns per step, default false
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

MODELS = ("sphere", "dlm-a", "dlm-b", "dlm-c", "kuramoto", "continuous-sphere", "continuous-matrix")
MATRIX_MODELS = ("dlm-a", "dlm-b", "dlm-c", "continuous-matrix")
SPHERE_MODELS = ("sphere", "continuous-sphere")
INIT_KINDS = ("random", "consensus", "near-consensus", "explicit")
HAMILTONIAN_KINDS = ("zero", "random-zero-sum", "explicit")
OUTPUT_KINDS = ("diagnostics-csv", "final-state-json", "framework-report-json")

_KEYS = {
    "model", "d", "N", "kappa", "h", "steps", "seed", "init", "hamiltonians",
    "outputs", "output_dir", "substeps_per_h", "timing",
}
_REQUIRED = ("model", "d", "N", "kappa", "h", "steps", "seed")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class InitSpec:
    kind: str = "random"
    radius: float = 0.0
    file: Path | None = None


@dataclass(frozen=True)
class HamiltonianSpec:
    kind: str = "zero"
    scale: float = 0.0
    file: Path | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    d: int
    N: int
    kappa: float
    h: float
    steps: int
    seed: int
    init: InitSpec = field(default_factory=InitSpec)
    hamiltonians: HamiltonianSpec = field(default_factory=HamiltonianSpec)
    outputs: tuple[str, ...] = ("diagnostics-csv",)
    output_dir: Path = Path("out")
    substeps_per_h: int = 100
    timing: bool = False

    @property
    def is_matrix(self) -> bool:
        return self.model in MATRIX_MODELS

    @property
    def is_sphere(self) -> bool:
        return self.model in SPHERE_MODELS

    @property
    def scheme(self) -> str:
        """Scheme letter for discrete matrix models; continuous runs report "A"."""
        return self.model[-1].upper() if self.model.startswith("dlm-") else "A"


def _int(raw: dict, key: str, lo: int, hi: int | None = None) -> int:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"must be an integer, got {value!r}")
    if value < lo or (hi is not None and value >= hi):
        bound = f">= {lo}" if hi is None else f"in [{lo}, {hi})"
        raise ConfigError(key, f"must be {bound}, got {value}")
    return value


def _float(raw: dict, key: str, positive: bool) -> float:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    if positive and value <= 0:
        raise ConfigError(key, f"must be positive, got {value}")
    if not positive and value < 0:
        raise ConfigError(key, f"must be nonnegative, got {value}")
    return value


def _kind_block(value: Any, key: str, kinds: tuple[str, ...], allowed: dict[str, set[str]]) -> dict:
    if isinstance(value, str):
        value = {"kind": value}
    if not isinstance(value, dict) or "kind" not in value:
        raise ConfigError(key, f"must be one of {kinds} or a mapping with 'kind'")
    kind = value["kind"]
    if kind not in kinds:
        raise ConfigError(f"{key}.kind", f"must be one of {kinds}, got {kind!r}")
    extra = set(value) - {"kind"} - allowed.get(kind, set())
    if extra:
        raise ConfigError(f"{key}.{sorted(extra)[0]}", f"unknown key for kind {kind!r}")
    missing = allowed.get(kind, set()) - set(value)
    if missing:
        raise ConfigError(f"{key}.{sorted(missing)[0]}", f"required for kind {kind!r}")
    return value


def _path(value: Any, key: str, base: Path) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(key, "must be a non-empty path string")
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_config(raw: Any, base_dir: Path | str = ".") -> ExperimentConfig:
    """Validate a parsed mapping; raises ConfigError naming the first bad field."""
    base = Path(base_dir)
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(key, "missing required key")

    model = raw["model"]
    if model not in MODELS:
        raise ConfigError("model", f"must be one of {MODELS}, got {model!r}")
    d = _int(raw, "d", 1)
    if model == "kuramoto" and d != 1:
        raise ConfigError("d", "kuramoto runs are phase models and need d = 1")
    if model in SPHERE_MODELS and d < 2:
        raise ConfigError("d", "sphere models need d >= 2")
    n = _int(raw, "N", 1)
    kappa = _float(raw, "kappa", positive=False)
    h = _float(raw, "h", positive=True)
    steps = _int(raw, "steps", 1)
    seed = _int(raw, "seed", 0, 2**64)

    init_raw = _kind_block(
        raw.get("init", "random"), "init", INIT_KINDS,
        {"near-consensus": {"radius"}, "explicit": {"file"}},
    )
    init = InitSpec(kind=init_raw["kind"])
    if init.kind == "near-consensus":
        init = InitSpec(kind="near-consensus", radius=_float(init_raw, "radius", positive=False))
    elif init.kind == "explicit":
        init = InitSpec(kind="explicit", file=_path(init_raw["file"], "init.file", base))

    ham_raw = _kind_block(
        raw.get("hamiltonians", "zero"), "hamiltonians", HAMILTONIAN_KINDS,
        {"random-zero-sum": {"scale"}, "explicit": {"file"}},
    )
    ham = HamiltonianSpec(kind=ham_raw["kind"])
    if ham.kind == "random-zero-sum":
        ham = HamiltonianSpec(kind="random-zero-sum", scale=_float(ham_raw, "scale", positive=False))
    elif ham.kind == "explicit":
        ham = HamiltonianSpec(kind="explicit", file=_path(ham_raw["file"], "hamiltonians.file", base))

    outputs = raw.get("outputs", ["diagnostics-csv"])
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ConfigError("outputs", "must be a list of output names")
    for o in outputs:
        if o not in OUTPUT_KINDS:
            raise ConfigError("outputs", f"unknown output {o!r}; expected one of {OUTPUT_KINDS}")

    output_dir = _path(raw.get("output_dir", "out"), "output_dir", base)
    substeps = 100
    if "substeps_per_h" in raw:
        if not model.startswith("continuous-"):
            raise ConfigError("substeps_per_h", "only valid for continuous models")
        substeps = _int(raw, "substeps_per_h", 1)
    timing = raw.get("timing", False)
    if not isinstance(timing, bool):
        raise ConfigError("timing", "must be true or false")

    return ExperimentConfig(
        model=model, d=d, N=n, kappa=kappa, h=h, steps=steps, seed=seed,
        init=init, hamiltonians=ham, outputs=tuple(dict.fromkeys(outputs)),
        output_dir=output_dir, substeps_per_h=substeps, timing=timing,
    )


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    try:
        docs = list(yaml.safe_load_all(text))
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from exc
    if len(docs) != 1:
        raise ConfigError("<file>", f"expected a single document, found {len(docs)}")
    return parse_config(docs[0], path.parent)
