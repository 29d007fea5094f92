"""Threshold functions Lambda(beta), M(beta), their roots, and hypothesis checkers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

SERIES_CUTOFF = 1e-4
ROOT_TOL = 1e-10
HSUM_TOL = 1e-12

THEOREM_IDS = ("T3.1", "T5.1", "P6.1", "T6.1", "T6.2", "P6.2", "T6.3")


def _expm1_over(c: float, beta: float) -> float:
    """(exp(c*beta) - 1) / (2*beta), continuous at beta = 0 (value c/2)."""
    if beta < SERIES_CUTOFF:
        # (c/2) * sum_k (c*beta)^k / (k+1)!
        x = c * beta
        total, term = 0.0, 1.0
        for k in range(12):
            term_k = term / math.factorial(k + 1)
            total += term_k
            term *= x
        return 0.5 * c * total
    return math.expm1(c * beta) / (2.0 * beta)


def lambda_of(beta: float) -> float:
    """Lambda(beta) = 4 - e^{2 beta} - (e^{2 beta} - 1)/(2 beta); Lambda(0) = 2."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return 4.0 - math.exp(2.0 * beta) - _expm1_over(2.0, beta)


def m_of(beta: float) -> float:
    """M(beta) = (6 - 2 e^{2 beta} - (e^{4 beta} - 1)/(2 beta)) / 6.

    The limit at beta = 0 is 1/3.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return (6.0 - 2.0 * math.exp(2.0 * beta) - _expm1_over(4.0, beta)) / 6.0


def bisect_decreasing(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    flo, fhi = f(lo), f(hi)
    if not (flo > 0 > fhi):
        raise ArithmeticError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_beta0() -> float:
    """Positive root of Lambda (aggregation threshold for beta)."""
    return bisect_decreasing(lambda_of, 0.0, 1.0)


def find_beta1() -> float:
    """Positive root of M (orbital-stability threshold for beta)."""
    return bisect_decreasing(m_of, 0.0, 1.0)


class ExistenceError(ValueError):
    def __init__(self, message: str, margin: float):
        super().__init__(message)
        self.margin = margin


def cubic_alphas(beta: float, dh_over_kappa: float, tol: float = 1e-13) -> tuple[float, float]:
    """Positive roots alpha1 < alpha2 of Lambda(beta) x - x^3 = 2 D(H)/kappa."""
    lam = lambda_of(beta)
    if not (0 < beta and lam > 0):
        raise ExistenceError(f"need 0 < beta < beta0 (Lambda({beta}) = {lam})", lam)
    if dh_over_kappa < 0:
        raise ValueError("D(H)/kappa must be nonnegative")
    bound = (lam / 3.0) ** 1.5
    margin = bound - dh_over_kappa
    if margin <= 0:
        raise ExistenceError(
            f"D(H)/kappa = {dh_over_kappa} must be below (Lambda/3)^(3/2) = {bound}", margin
        )
    peak = math.sqrt(lam / 3.0)
    top = math.sqrt(lam)
    if dh_over_kappa == 0:
        return 0.0, top
    rhs = 2.0 * dh_over_kappa

    def g(x):
        return lam * x - x**3 - rhs

    lo, hi = 0.0, peak  # g increasing here, g(0) < 0 < g(peak)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    a1 = 0.5 * (lo + hi)
    lo, hi = peak, top  # g decreasing here, g(peak) > 0 > g(top)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    a2 = 0.5 * (lo + hi)
    return a1, a2


# --- framework reports ------------------------------------------------------


@dataclass(frozen=True)
class Margin:
    condition: str
    required: float
    actual: float
    slack: float


@dataclass(frozen=True)
class FrameworkReport:
    theorem_id: str
    margins: tuple[Margin, ...]
    verdict: str = "rigorous"  # "heuristic" / "empirical" when the hypotheses carry no explicit constants
    notes: tuple[str, ...] = ()

    @property
    def satisfied(self) -> bool:
        return all(m.slack >= 0 for m in self.margins)

    def failed_conditions(self) -> list[str]:
        return [m.condition for m in self.margins if m.slack < 0]

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "satisfied": self.satisfied,
            "verdict": self.verdict,
            "margins": [
                {"condition": m.condition, "required": m.required, "actual": m.actual, "slack": m.slack}
                for m in self.margins
            ],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class FrameworkInputs:
    """Numbers a hypothesis check needs; unused fields are ignored per theorem."""

    beta: float
    diameter0: float = 0.0
    diameter0_tilde: float | None = None
    dh_over_kappa: float = 0.0
    min_pair_inner0: float | None = None
    rotation_norm: float = 0.0
    h_sum_defect: float = 0.0
    alpha: float | None = None
    epsilon: float = 0.5
    implied_constant: float = 1.0
    extra: dict = field(default_factory=dict)


def _below(name: str, actual: float, bound: float) -> Margin:
    return Margin(name, bound, actual, bound - actual)


def _above(name: str, actual: float, bound: float) -> Margin:
    return Margin(name, bound, actual, actual - bound)


def _ball_alpha(cfg: FrameworkInputs) -> float:
    if cfg.alpha is not None:
        return cfg.alpha
    return max(cfg.diameter0, cfg.diameter0_tilde or 0.0)


def _diam_rows(cfg: FrameworkInputs, alpha: float) -> list[Margin]:
    rows = [_below("D(U0) <= alpha", cfg.diameter0, alpha)]
    if cfg.diameter0_tilde is not None:
        rows.append(_below("D(U~0) <= alpha", cfg.diameter0_tilde, alpha))
    return rows


def check_framework(theorem_id: str, cfg: FrameworkInputs) -> FrameworkReport:
    if theorem_id not in THEOREM_IDS:
        raise ValueError(f"unknown theorem id {theorem_id!r}; expected one of {THEOREM_IDS}")
    beta = cfg.beta
    rows: list[Margin] = [_above("beta > 0", beta, 0.0)]
    verdict = "rigorous"
    notes: list[str] = []
    lam = lambda_of(max(beta, 0.0))
    m = m_of(max(beta, 0.0))

    if theorem_id == "T3.1":
        rows.append(_below("kappa*h <= 1", beta, 1.0))
        rows.append(_below("Omega_i = 0", cfg.rotation_norm, 0.0))
        b0 = cfg.min_pair_inner0 if cfg.min_pair_inner0 is not None else float("nan")
        rows.append(_above("min_ij <x_i, x_j>(0) > 0", b0, 0.0))

    elif theorem_id == "T5.1":
        beta0 = find_beta0()
        rows.append(_below("beta < beta0", beta, beta0))
        rows.append(_below("D(H) = 0", cfg.dh_over_kappa, 0.0))
        rows.append(_below("D(0)^2 < Lambda(beta)", cfg.diameter0**2, lam))

    elif theorem_id in ("P6.1", "T6.2"):
        beta0, beta1 = find_beta0(), find_beta1()
        if theorem_id == "P6.1":
            rows.append(_below("beta < beta0", beta, beta0))
        else:
            rows.append(_below("beta < beta1", beta, beta1))
        rows.append(_below("D(H)/kappa < (Lambda/3)^(3/2)", cfg.dh_over_kappa, (max(lam, 0.0) / 3.0) ** 1.5))
        if theorem_id == "T6.2":
            rows.append(_below("D(H)/kappa < (Lambda*M - M^3)/2", cfg.dh_over_kappa, 0.5 * (lam * m - m**3)))
        try:
            _, a2 = cubic_alphas(beta, cfg.dh_over_kappa)
        except (ExistenceError, ValueError):
            a2 = float("nan")
            notes.append("alpha2 undefined: cubic has no admissible positive roots")
        rows.append(_below("D(U0) < alpha2", cfg.diameter0, a2))

    elif theorem_id == "T6.1":
        beta1 = find_beta1()
        alpha = _ball_alpha(cfg)
        rows.append(_below("beta < beta1", beta, beta1))
        rows.append(_above("alpha > 0", alpha, 0.0))
        rows.append(_below("alpha < M(beta)", alpha, m))
        rows.extend(_diam_rows(cfg, alpha))
        notes.append("ball membership for all n is checked along the run, not certified here")

    elif theorem_id == "P6.2":
        verdict = "empirical"
        rows.append(_below("||sum_k H_k||_F <= 1e-12", cfg.h_sum_defect, HSUM_TOL))
        rows.append(
            _below(
                "D(H)/kappa <= C*beta^(1+eps)",
                cfg.dh_over_kappa,
                cfg.implied_constant * beta ** (1.0 + cfg.epsilon) if beta > 0 else 0.0,
            )
        )
        notes.append("beta* has no closed form; invariance of B(beta^(eps/2)) is observed empirically only")

    elif theorem_id == "T6.3":
        verdict = "heuristic"
        alpha = _ball_alpha(cfg)
        rows.append(_below("||sum_k H_k||_F <= 1e-12", cfg.h_sum_defect, HSUM_TOL))
        rows.append(
            _below(
                "D(H)/kappa <= C*beta^(1+eps)",
                cfg.dh_over_kappa,
                cfg.implied_constant * beta ** (1.0 + cfg.epsilon) if beta > 0 else 0.0,
            )
        )
        rows.append(_above("alpha > 0", alpha, 0.0))
        rows.append(_below("alpha < M(beta) - 2 D(H)/kappa", alpha, m - 2.0 * cfg.dh_over_kappa))
        rows.extend(_diam_rows(cfg, alpha))
        notes.append("'beta << 1' and the implied constant are caller choices; verdict is heuristic")

    return FrameworkReport(theorem_id, tuple(rows), verdict, tuple(notes))


# --- per-step rate constants used by the run checks ---------------------------


def aggregation_factor(beta: float, diameter0: float) -> float:
    """Squared per-step contraction factor 1 - beta (Lambda(beta) - D(0)^2)."""
    return 1.0 - beta * (lambda_of(beta) - diameter0**2)


def orbital_rate_b(beta: float, alpha: float) -> float:
    """sqrt(1 - 6 beta (M(beta) - alpha)) for scheme B."""
    return math.sqrt(1.0 - 6.0 * beta * (m_of(beta) - alpha))


def orbital_rate_c(beta: float, alpha: float, dh_over_kappa: float) -> float:
    """sqrt(1 - 6 beta (M(beta) - alpha - 2 D(H)/kappa)) for scheme C."""
    return math.sqrt(1.0 - 6.0 * beta * (m_of(beta) - alpha - 2.0 * dh_over_kappa))
