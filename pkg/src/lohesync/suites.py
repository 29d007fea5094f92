"""Scripted theorem suites: canonical configurations, per-step checks, pass/fail summaries.

Every suite first evaluates the hypotheses of its theorem.  Dynamics
criteria are only asserted when the hypotheses hold; otherwise they are
reported as skipped and the suite is exploratory.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .continuous import uniform_convergence_experiment
from .linalg import (
    dagger,
    expm_skew_hermitian,
    frobenius_norm,
    operator_norm,
    random_hermitian,
    random_hermitian_zero_trace_sum,
    random_unit_vector,
    random_unitary,
)
from .sphere import SphereEnsemble, centroid, pair_inner_products, sphere_diagnostics, sphere_step
from .thresholds import (
    FrameworkInputs,
    FrameworkReport,
    aggregation_factor,
    check_framework,
    lambda_of,
    orbital_rate_b,
    orbital_rate_c,
)
from .unitary import (
    UnitaryEnsemble,
    coupling_deltas,
    dlm_step,
    hamiltonian_diameter,
    matrix_diameter,
    mean_state,
    relative_position_distance,
    state_locking_detector,
    strang_intermediate,
)

SUITE_IDS = ("T3.1", "T5.1", "T6.1", "T6.2", "T6.3", "lemmas")
RATIO_FLOOR = 1e-10  # below this distance the per-step ratio is roundoff


@dataclass
class Criterion:
    name: str
    passed: bool | None  # None: skipped because the hypotheses failed
    detail: str = ""
    margin: float | None = None

    def to_dict(self) -> dict:
        state = "skipped" if self.passed is None else ("pass" if self.passed else "fail")
        return {"name": self.name, "status": state, "detail": self.detail, "margin": self.margin}


@dataclass
class SuiteResult:
    suite_id: str
    framework: FrameworkReport | None
    criteria: list[Criterion] = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.criteria if c.passed is False]

    @property
    def status(self) -> str:
        if self.failed:
            return "fail"
        if self.framework is not None and not self.framework.satisfied:
            return "unsatisfied"
        return "pass"

    @property
    def exit_code(self) -> int:
        return 4 if self.failed else 0

    def to_dict(self) -> dict:
        return {
            "suite_id": self.suite_id,
            "status": self.status,
            "framework": self.framework.to_dict() if self.framework is not None else None,
            "criteria": [c.to_dict() for c in self.criteria],
            "elapsed_s": self.elapsed_s,
        }


@dataclass(frozen=True)
class SuiteOptions:
    """Overrides for the canonical suite parameters; None keeps the default."""

    kappa: float | None = None
    h: float | None = None
    seed: int | None = None
    steps: int | None = None


def _pick(value, default):
    return default if value is None else value


def _gate(framework: FrameworkReport, names: list[str]) -> list[Criterion] | None:
    if framework.satisfied:
        return None
    why = "hypotheses violated: " + "; ".join(framework.failed_conditions())
    return [Criterion(n, None, why) for n in names]


# --- shared ensemble builders --------------------------------------------------------


def cap_points(d: int, n: int, angle: float, rng) -> np.ndarray:
    """Points within geodesic distance ``angle`` of a random pole."""
    pole = random_unit_vector(d, rng)
    out = []
    for _ in range(n):
        g = rng.standard_normal(d)
        g -= (g @ pole) * pole
        a = angle * rng.uniform()
        out.append(np.cos(a) * pole + np.sin(a) * g / np.linalg.norm(g))
    return np.array(out)


def near_identity_unitaries(d: int, n: int, radius: float, rng) -> np.ndarray:
    base = random_unitary(d, rng)
    out = []
    for _ in range(n):
        g = random_hermitian(d, rng)
        g /= np.linalg.norm(g)
        out.append(expm_skew_hermitian(1j * radius * rng.uniform() * g) @ base)
    return np.array(out)


def unitaries_with_diameter(d: int, n: int, target: float, rng, tol: float = 1e-13) -> np.ndarray:
    """U_i = exp(i t G_i) U_0 with t tuned by bisection so that the diameter equals ``target``."""
    base = random_unitary(d, rng)
    gens = [random_hermitian(d, rng) for _ in range(n)]
    gens = [g / np.linalg.norm(g) for g in gens]

    def build(t):
        return np.array([expm_skew_hermitian(1j * t * g) @ base for g in gens])

    lo, hi = 0.0, 0.5
    while matrix_diameter(build(hi)) < target:
        hi *= 2.0
        if hi > 1e3:
            raise ArithmeticError("cannot reach the requested diameter")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if matrix_diameter(build(mid)) < target:
            lo = mid
        else:
            hi = mid
    return build(0.5 * (lo + hi))


# --- T3.1 -----------------------------------------------------------------------------


def suite_t31(opts: SuiteOptions) -> SuiteResult:
    kappa, h = _pick(opts.kappa, 1.0), _pick(opts.h, 1.0)
    steps = _pick(opts.steps, 10_000)
    rng = np.random.default_rng(_pick(opts.seed, 31))
    pts = cap_points(3, 10, 0.7, rng)  # pairwise angle <= 1.4, so min inner >= cos(1.4) > 0.1
    ens = SphereEnsemble.homogeneous(pts, kappa, h)
    b0 = float(np.min(pair_inner_products(pts)))
    fw = check_framework("T3.1", FrameworkInputs(beta=kappa * h, min_pair_inner0=b0))
    names = ["initial min inner product >= 0.1", "inner products non-decreasing", "diameter < 1e-6"]
    result = SuiteResult("T3.1", fw)
    skipped = _gate(fw, names)
    if skipped:
        result.criteria = skipped
        return result

    slack = 1e-13
    worst_drop = -math.inf
    gram = pair_inner_products(ens.points)
    center = ens.points @ centroid(ens.points)
    rho = float(np.linalg.norm(centroid(ens.points)))
    hit = None
    for n in range(1, steps + 1):
        ens = sphere_step(ens)
        g2 = pair_inner_products(ens.points)
        c2 = ens.points @ centroid(ens.points)
        r2 = float(np.linalg.norm(centroid(ens.points)))
        worst_drop = max(worst_drop, float(np.max(gram - g2)), float(np.max(center - c2)), rho - r2)
        gram, center, rho = g2, c2, r2
        if hit is None and sphere_diagnostics(ens).diameter < 1e-6:
            hit = n
    result.criteria = [
        Criterion(names[0], b0 >= 0.1, f"B(0) = {b0:.6g}", b0 - 0.1),
        Criterion(names[1], worst_drop <= slack, f"largest decrease {worst_drop:.3e} (slack {slack:g})", slack - worst_drop),
        Criterion(names[2], hit is not None, f"first reached at step {hit}" if hit else f"not reached in {steps} steps"),
    ]
    return result


# --- T5.1 -----------------------------------------------------------------------------


def _pair_sq(u: np.ndarray) -> np.ndarray:
    diff = u[:, None] - u[None, :]
    return np.sum(np.abs(diff) ** 2, axis=(-2, -1))


def suite_t51(opts: SuiteOptions) -> SuiteResult:
    kappa, h = _pick(opts.kappa, 1.0), _pick(opts.h, 0.3)
    beta = kappa * h
    steps = _pick(opts.steps, 2000)
    rng = np.random.default_rng(_pick(opts.seed, 51))
    lam = lambda_of(max(beta, 0.0))
    target = 0.8 * math.sqrt(lam) if lam > 0 else 0.5
    u0 = unitaries_with_diameter(2, 8, target, rng)
    ens = UnitaryEnsemble.homogeneous(u0, kappa, h, "A")
    d0 = matrix_diameter(ens)
    fw = check_framework("T5.1", FrameworkInputs(beta=beta, diameter0=d0))
    names = ["pairwise contraction every step", "diameter below (1-C)^n D(0)"]
    result = SuiteResult("T5.1", fw)
    skipped = _gate(fw, names)
    if skipped:
        result.criteria = skipped
        return result

    factor = aggregation_factor(beta, d0)
    rate = math.sqrt(factor)  # 1 - C
    slack = 1e-12
    worst_pair = -math.inf
    worst_env = -math.inf
    sq = _pair_sq(ens.matrices)
    for n in range(1, steps + 1):
        ens = dlm_step(ens)
        sq2 = _pair_sq(ens.matrices)
        worst_pair = max(worst_pair, float(np.max(sq2 - factor * sq)))
        worst_env = max(worst_env, matrix_diameter(ens) - rate**n * d0)
        sq = sq2
    result.criteria = [
        Criterion(names[0], worst_pair <= slack, f"max excess {worst_pair:.3e}, factor {factor:.6f}", slack - worst_pair),
        Criterion(names[1], worst_env <= slack, f"max excess {worst_env:.3e}, 1-C = {rate:.6f}", slack - worst_env),
    ]
    return result


# --- T6.1 / T6.3 paired runs -------------------------------------------------------------


@dataclass(frozen=True)
class PairedRegime:
    kappa: float = 5.0
    h: float = 0.02
    d: int = 2
    n: int = 4
    dh: float = 0.05  # Hamiltonian diameter, so D(H)/kappa = 0.01
    radius: float = 0.05
    alpha: float = 0.12
    steps: int = 5000


def paired_regime(opts: SuiteOptions) -> tuple[PairedRegime, UnitaryEnsemble, np.ndarray]:
    reg = PairedRegime()
    reg = PairedRegime(
        kappa=_pick(opts.kappa, reg.kappa), h=_pick(opts.h, reg.h), steps=_pick(opts.steps, reg.steps)
    )
    rng = np.random.default_rng(_pick(opts.seed, 61))
    hs = random_hermitian_zero_trace_sum(reg.d, reg.n, rng)
    hs = hs * (reg.dh / hamiltonian_diameter(hs))
    u = near_identity_unitaries(reg.d, reg.n, reg.radius, rng)
    v = near_identity_unitaries(reg.d, reg.n, reg.radius, rng)
    return reg, UnitaryEnsemble(u, hs, reg.kappa, reg.h, "B"), v


def _paired(suite_id: str, scheme: str, opts: SuiteOptions) -> SuiteResult:
    reg, ens, v0 = paired_regime(opts)
    ens = UnitaryEnsemble(ens.matrices, ens.hamiltonians, ens.kappa, ens.h, scheme)
    other = ens.with_matrices(v0)
    beta = ens.beta
    dh_k = hamiltonian_diameter(ens) / reg.kappa if reg.kappa > 0 else math.inf
    inputs = FrameworkInputs(
        beta=beta,
        diameter0=matrix_diameter(ens),
        diameter0_tilde=matrix_diameter(other),
        dh_over_kappa=dh_k,
        alpha=reg.alpha,
        h_sum_defect=float(np.linalg.norm(np.sum(ens.hamiltonians, axis=0))),
    )
    theorem = "T6.1" if scheme == "B" else "T6.3"
    fw = check_framework(theorem, inputs)
    names = ["diameters stay in the alpha-ball", "per-step contraction of d(U, U~)", "U_i U~_i^+ tail increments < 1e-8"]
    result = SuiteResult(suite_id, fw)
    skipped = _gate(fw, names)
    if skipped:
        result.criteria = skipped
        return result

    if scheme == "B":
        bound = orbital_rate_b(beta, reg.alpha)
    else:
        bound = orbital_rate_c(beta, reg.alpha, dh_k)
    dist = relative_position_distance(ens, other)
    d_start = dist
    worst_ratio = 0.0
    worst_diam = max(matrix_diameter(ens), matrix_diameter(other))
    prev = ens.matrices @ dagger(other.matrices)
    increments = []
    for _ in range(reg.steps):
        if scheme == "C":
            worst_diam = max(
                worst_diam, matrix_diameter(strang_intermediate(ens)), matrix_diameter(strang_intermediate(other))
            )
        ens, other = dlm_step(ens), dlm_step(other)
        worst_diam = max(worst_diam, matrix_diameter(ens), matrix_diameter(other))
        d_next = relative_position_distance(ens, other)
        if dist >= RATIO_FLOOR:
            worst_ratio = max(worst_ratio, d_next / dist)
        dist = d_next
        cur = ens.matrices @ dagger(other.matrices)
        increments.append(float(np.max(np.sqrt(np.sum(np.abs(cur - prev) ** 2, axis=(-2, -1))))))
        prev = cur
    tail = max(increments[-100:])
    result.criteria = [
        Criterion(names[0], worst_diam <= reg.alpha, f"max diameter {worst_diam:.6g} vs alpha {reg.alpha}", reg.alpha - worst_diam),
        Criterion(
            names[1],
            worst_ratio <= bound + 1e-10,
            f"max ratio {worst_ratio:.6f} vs bound {bound:.6f}; d(0) = {d_start:.3e}, d(end) = {dist:.3e}",
            bound + 1e-10 - worst_ratio,
        ),
        Criterion(names[2], tail < 1e-8, f"max increment over last 100 of {reg.steps} steps: {tail:.3e}", 1e-8 - tail),
    ]
    return result


def suite_t61(opts: SuiteOptions) -> SuiteResult:
    return _paired("T6.1", "B", opts)


def suite_t63(opts: SuiteOptions) -> SuiteResult:
    return _paired("T6.3", "C", opts)


# --- T6.2 -----------------------------------------------------------------------------


CONVERGENCE_H = (0.02, 0.01, 0.005)
CONVERGENCE_TIME = 3.0


def suite_t62(opts: SuiteOptions) -> SuiteResult:
    reg, ens, _ = paired_regime(opts)
    dh_k = hamiltonian_diameter(ens) / reg.kappa if reg.kappa > 0 else math.inf
    fw = check_framework("T6.2", FrameworkInputs(beta=ens.beta, diameter0=matrix_diameter(ens), dh_over_kappa=dh_k))
    names = ["relative states U_i U_j^+ converge", "sup-distance decreases with h", "first-order ratios in [1.5, 2.5]"]
    result = SuiteResult("T6.2", fw)
    skipped = _gate(fw, names)
    if skipped:
        result.criteria = skipped
        return result

    window = 100
    history = [ens]
    cur = ens
    for _ in range(reg.steps):
        cur = dlm_step(cur)
        history.append(cur)
        if len(history) > window:
            history.pop(0)
    lock = state_locking_detector(history, window, 1e-8)

    horizons = [int(round(CONVERGENCE_TIME / h)) for h in CONVERGENCE_H]
    rows = uniform_convergence_experiment(ens, "B", CONVERGENCE_H, horizons)
    sups = [r.sup_distance for r in rows]
    ratios = [a / b for a, b in zip(sups, sups[1:])]
    decreasing = all(b < a for a, b in zip(sups, sups[1:]))
    ratio_ok = all(1.5 <= r <= 2.5 for r in ratios)
    table = ", ".join(f"h={r.h:g}: {r.sup_distance:.4e}" for r in rows)
    result.criteria = [
        Criterion(names[0], lock.locked, f"window increment {lock.window_increment:.3e} over {window} steps", 1e-8 - lock.window_increment),
        Criterion(names[1], decreasing, table),
        Criterion(names[2], ratio_ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios)),
    ]
    return result


# --- lemma suite ------------------------------------------------------------------------


LEMMA_SLACK = 1e-12


class _Tally:
    def __init__(self):
        self.violations: dict[str, int] = {}
        self.worst: dict[str, float] = {}

    def le(self, name: str, lhs: float, rhs: float) -> None:
        excess = lhs - rhs
        self.worst[name] = max(self.worst.get(name, -math.inf), excess)
        if excess > LEMMA_SLACK * max(1.0, abs(rhs)):
            self.violations[name] = self.violations.get(name, 0) + 1
        else:
            self.violations.setdefault(name, 0)

    def eq(self, name: str, lhs: float, rhs: float) -> None:
        self.le(name, abs(lhs - rhs), 0.0)


def _ginibre(d: int, rng) -> np.ndarray:
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def _contraction(d: int, rng) -> np.ndarray:
    """Either a Haar unitary or a random matrix scaled to operator norm <= 1."""
    if rng.uniform() < 0.5:
        return random_unitary(d, rng)
    a = _ginibre(d, rng)
    return a / (operator_norm(a) * (1.0 + rng.uniform()))


def lemma_trials(trials: int = 1000, seed: int = 55) -> _Tally:
    rng = np.random.default_rng(seed)
    tally = _Tally()
    dims = (2, 3, 4)
    for t in range(trials):
        d = dims[t % 3]
        # norm inequalities between Frobenius and operator norms
        a, b, u = _ginibre(d, rng), _ginibre(d, rng), random_unitary(d, rng)
        fa, fb = frobenius_norm(a), frobenius_norm(b)
        tally.le("L5.1 |AB|_F <= |A|_op |B|_F", frobenius_norm(a @ b), operator_norm(a) * fb)
        tally.le("L5.1 |AB|_F <= |A|_F |B|_op", frobenius_norm(a @ b), fa * operator_norm(b))
        tally.eq("L5.1 |AU|_F = |A|_F", frobenius_norm(a @ u), fa)
        tally.eq("L5.1 |UA|_F = |A|_F", frobenius_norm(u @ a), fa)

        # submultiplicativity and trace bound
        k = 2 + t % 3
        mats = [_ginibre(d, rng) for _ in range(k)]
        prod = np.linalg.multi_dot(mats) if k > 2 else mats[0] @ mats[1]
        bound = float(np.prod([frobenius_norm(m) for m in mats]))
        tally.le("L5.2 submultiplicativity", frobenius_norm(prod), bound)
        tally.le("L5.2 trace bound", abs(np.trace(prod)), bound)

        # telescoping for contractions
        kk = 1 + t % 4
        left = [_contraction(d, rng) for _ in range(kk)]
        right = [_contraction(d, rng) for _ in range(kk)]
        pl, pr = np.eye(d), np.eye(d)
        for x, y in zip(left, right):
            pl, pr = pl @ x, pr @ y
        tally.le(
            "L5.3 telescoping",
            frobenius_norm(pl - pr),
            sum(frobenius_norm(x - y) for x, y in zip(left, right)),
        )

        # coupling-term estimates on a live ensemble
        n = 2 + t % 5
        if rng.uniform() < 0.5:
            ens = np.array([random_unitary(d, rng) for _ in range(n)])
        else:
            ens = near_identity_unitaries(d, n, rng.uniform(0.05, 2.0), rng)
        deltas = coupling_deltas(ens)
        uc_op = operator_norm(mean_state(ens))
        for i in range(n):
            spread = sum(frobenius_norm(ens[k2] - ens[i]) for k2 in range(n)) / n
            tally.le("L5.4(i) |Delta_i|_F <= mean |U_k - U_i|_F", frobenius_norm(deltas[i]), spread)
            tally.le("L5.4(ii) |Delta_i|_op <= |U_c|_op", operator_norm(deltas[i]), uc_op)
            for j in range(i + 1, n):
                dij = ens[i] - ens[j]
                cross = ens[i] @ dagger(ens[j]) - ens[j] @ dagger(ens[i])
                tally.le("L5.4(i) |U_iU_j^+ - U_jU_i^+|_F <= 2|U_i - U_j|_F", frobenius_norm(cross), 2 * frobenius_norm(dij))
                tally.le("L5.4(ii) |Delta_i - Delta_j|_F <= |U_i - U_j|_F", frobenius_norm(deltas[i] - deltas[j]), frobenius_norm(dij))
                tally.le("L5.4(ii) |Delta_i - Delta_j|_op <= |U_i - U_j|_op", operator_norm(deltas[i] - deltas[j]), operator_norm(dij))
        tally.le("L5.4(ii) |U_c|_op <= 1", uc_op, 1.0)

        # Hermitian exponential contraction
        ha, hb = random_hermitian(d, rng), random_hermitian(d, rng)
        if rng.uniform() < 0.5:
            hb = ha + rng.uniform(1e-3, 1.0) * random_hermitian(d, rng)
        tally.le(
            "L6.1 |e^{iA} - e^{iB}|_F <= |A - B|_F",
            frobenius_norm(expm_skew_hermitian(1j * ha) - expm_skew_hermitian(1j * hb)),
            frobenius_norm(ha - hb),
        )
    return tally


def suite_lemmas(opts: SuiteOptions) -> SuiteResult:
    trials = _pick(opts.steps, 1000)
    tally = lemma_trials(trials, _pick(opts.seed, 55))
    result = SuiteResult("lemmas", None)
    for name, count in tally.violations.items():
        result.criteria.append(
            Criterion(name, count == 0, f"{count} violations in {trials} trials, worst excess {tally.worst[name]:.3e}", -tally.worst[name])
        )
    return result


SUITES: dict[str, Callable[[SuiteOptions], SuiteResult]] = {
    "T3.1": suite_t31,
    "T5.1": suite_t51,
    "T6.1": suite_t61,
    "T6.2": suite_t62,
    "T6.3": suite_t63,
    "lemmas": suite_lemmas,
}


def run_theorem_suite(suite_id: str, opts: SuiteOptions | None = None) -> SuiteResult:
    if suite_id not in SUITES:
        raise ValueError(f"unknown suite {suite_id!r}; expected one of {SUITE_IDS}")
    start = time.perf_counter()
    result = SUITES[suite_id](opts or SuiteOptions())
    result.elapsed_s = time.perf_counter() - start
    return result
