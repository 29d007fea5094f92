import math

import numpy as np
import pytest

from lohesync.thresholds import (
    ExistenceError,
    FrameworkInputs,
    THEOREM_IDS,
    aggregation_factor,
    check_framework,
    cubic_alphas,
    find_beta0,
    find_beta1,
    lambda_of,
    m_of,
    orbital_rate_b,
    orbital_rate_c,
)

# 40-digit evaluations of the closed forms, frozen
LAMBDA_0_1 = 1.6715834510389809965
LAMBDA_0_3 = 0.80768319895864273367
M_0_1 = 0.18301183257888479051
M_0_3 = -0.25184985644587729427
LAMBDA_5E_5 = 1.999849993333124995
M_5E_5 = 0.33326666277761110528
BETA0 = 0.43786357186613322422
BETA1 = 0.19630199304690366515
HALF_BETA_LAMBDA_MAX = 0.13205384673219903383  # attained at beta = 0.23930016974956


def series_expm1_over(c, beta, terms=50):
    """(e^{c beta} - 1)/(2 beta) summed term by term, as an independent check."""
    total, term = 0.0, c / 2.0
    for k in range(terms):
        total += term
        term *= c * beta / (k + 2)
    return total


class TestLambdaM:
    def test_values_at_zero(self):
        assert lambda_of(0.0) == 2.0
        assert m_of(0.0) == pytest.approx(1.0 / 3.0, abs=1e-15)

    @pytest.mark.parametrize(
        "beta,lam,m",
        [(0.1, LAMBDA_0_1, M_0_1), (0.3, LAMBDA_0_3, M_0_3), (5e-5, LAMBDA_5E_5, M_5E_5)],
    )
    def test_frozen_values(self, beta, lam, m):
        assert lambda_of(beta) == pytest.approx(lam, abs=1e-14)
        assert m_of(beta) == pytest.approx(m, abs=1e-14)

    def test_against_series(self):
        for beta in (1e-6, 1e-3, 0.1, 0.4):
            lam = 4 - math.exp(2 * beta) - series_expm1_over(2, beta)
            m = (6 - 2 * math.exp(2 * beta) - series_expm1_over(4, beta)) / 6
            assert lambda_of(beta) == pytest.approx(lam, abs=1e-14)
            assert m_of(beta) == pytest.approx(m, abs=1e-14)

    def test_continuous_across_series_cutoff(self):
        below, above = 1e-4 * (1 - 1e-9), 1e-4 * (1 + 1e-9)
        assert abs(lambda_of(below) - lambda_of(above)) < 1e-12
        assert abs(m_of(below) - m_of(above)) < 1e-12

    def test_strictly_decreasing(self):
        betas = np.linspace(0.0, 0.5, 10_001)
        lam = np.array([lambda_of(b) for b in betas])
        m = np.array([m_of(b) for b in betas])
        assert np.all(np.diff(lam) < 0)
        assert np.all(np.diff(m) < 0)

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            lambda_of(-0.1)
        with pytest.raises(ValueError):
            m_of(-0.1)

    def test_m_below_peak(self):
        beta1 = find_beta1()
        for beta in np.linspace(1e-3, beta1 * 0.999, 200):
            assert m_of(beta) < math.sqrt(lambda_of(beta) / 3)


class TestRoots:
    def test_beta0(self):
        b0 = find_beta0()
        assert abs(b0 - BETA0) < 1e-9
        assert 0.437854 <= b0 <= 0.437874
        assert abs(lambda_of(b0)) <= 1e-9

    def test_beta1(self):
        b1 = find_beta1()
        assert abs(b1 - BETA1) < 1e-9
        assert 0.196292 <= b1 <= 0.196312
        assert abs(m_of(b1)) <= 1e-9

    def test_ordering(self):
        assert find_beta1() < find_beta0()

    def test_half_beta_lambda_maximum(self):
        betas = np.linspace(1e-6, find_beta0(), 200_001)
        vals = betas / 2 * np.array([lambda_of(b) for b in betas])
        peak = float(np.max(vals))
        assert abs(peak - HALF_BETA_LAMBDA_MAX) < 1e-9
        # the published five-decimal figure matches the true maximum to its printed precision
        assert abs(peak - 0.13205) < 1e-5

    def test_half_beta_lambda_below_published_bound(self):
        # literal bound as published; the true maximum exceeds it by about 3.8e-6
        betas = np.linspace(1e-6, find_beta0(), 200_001)
        vals = betas / 2 * np.array([lambda_of(b) for b in betas])
        assert float(np.max(vals)) <= 0.13205
        assert find_beta0() / 2 * lambda_of(find_beta0()) <= 0.13205


class TestCubic:
    def test_degenerate(self):
        a1, a2 = cubic_alphas(0.1, 0.0)
        assert a1 == 0.0
        assert a2 == pytest.approx(math.sqrt(LAMBDA_0_1), abs=1e-15)

    def test_frozen_roots(self):
        # roots of Lambda(0.1) x - x^3 = 0.1 from a polynomial solver at 40 digits
        a1, a2 = cubic_alphas(0.1, 0.05)
        assert a1 == pytest.approx(0.059952428081432682378, abs=1e-12)
        assert a2 == pytest.approx(1.2618781627426486955, abs=1e-12)

    def test_residual_and_ordering(self):
        rng = np.random.default_rng(0)
        b0 = find_beta0()
        for _ in range(100):
            beta = rng.uniform(1e-3, b0 * 0.999)
            lam = lambda_of(beta)
            dh = rng.uniform(0, 0.999) * (lam / 3) ** 1.5
            a1, a2 = cubic_alphas(beta, dh)
            for a in (a1, a2):
                assert abs(lam * a - a**3 - 2 * dh) <= 1e-10
            assert 0 < a1 < math.sqrt(lam / 3) < a2 < math.sqrt(lam)

    def test_existence_violation(self):
        lam = lambda_of(0.1)
        with pytest.raises(ExistenceError) as err:
            cubic_alphas(0.1, (lam / 3) ** 1.5 * 1.01)
        assert err.value.margin < 0

    def test_beta_out_of_range(self):
        with pytest.raises(ExistenceError):
            cubic_alphas(0.5, 0.01)


class TestFramework:
    def test_t51_satisfied(self):
        rep = check_framework("T5.1", FrameworkInputs(beta=0.3, diameter0=0.5))
        assert rep.satisfied
        row = [m for m in rep.margins if m.condition.startswith("D(0)^2")][0]
        assert row.slack == pytest.approx(LAMBDA_0_3 - 0.25, abs=1e-12)

    def test_t31_violated_margin(self):
        rep = check_framework("T3.1", FrameworkInputs(beta=1.2, min_pair_inner0=0.3))
        assert not rep.satisfied
        row = [m for m in rep.margins if m.condition == "kappa*h <= 1"][0]
        assert row.slack == pytest.approx(-0.2)
        assert rep.failed_conditions() == ["kappa*h <= 1"]

    def test_t31_needs_positive_inner_products(self):
        rep = check_framework("T3.1", FrameworkInputs(beta=0.5, min_pair_inner0=-0.1))
        assert not rep.satisfied

    def test_t62_zero_heterogeneity(self):
        rep = check_framework("T6.2", FrameworkInputs(beta=0.1, diameter0=0.3, dh_over_kappa=0.0))
        het = [m for m in rep.margins if "Lambda*M" in m.condition][0]
        assert het.slack > 0
        assert rep.satisfied
        rep = check_framework("T6.2", FrameworkInputs(beta=0.1, diameter0=2.0, dh_over_kappa=0.0))
        assert rep.failed_conditions() == ["D(U0) < alpha2"]

    def test_t62_heterogeneity_threshold(self):
        m, lam = M_0_1, LAMBDA_0_1
        limit = 0.5 * (lam * m - m**3)
        assert limit == pytest.approx(0.149894937411305, abs=1e-12)
        rep = check_framework("T6.2", FrameworkInputs(beta=0.1, diameter0=0.1, dh_over_kappa=limit * 1.01))
        assert not rep.satisfied

    def test_t61_alpha_rows(self):
        ok = check_framework("T6.1", FrameworkInputs(beta=0.1, diameter0=0.1, diameter0_tilde=0.1, alpha=0.15))
        assert ok.satisfied
        bad = check_framework("T6.1", FrameworkInputs(beta=0.1, diameter0=0.1, alpha=0.2))
        assert "alpha < M(beta)" in bad.failed_conditions()

    def test_t63_heuristic(self):
        rep = check_framework(
            "T6.3", FrameworkInputs(beta=0.1, diameter0=0.1, dh_over_kappa=0.01, alpha=0.12, h_sum_defect=1e-16)
        )
        assert rep.verdict == "heuristic"
        assert rep.satisfied
        rep = check_framework(
            "T6.3", FrameworkInputs(beta=0.1, diameter0=0.1, dh_over_kappa=0.01, alpha=0.17, h_sum_defect=1e-16)
        )
        assert "alpha < M(beta) - 2 D(H)/kappa" in rep.failed_conditions()

    def test_p62_empirical(self):
        rep = check_framework("P6.2", FrameworkInputs(beta=0.1, dh_over_kappa=0.01))
        assert rep.verdict == "empirical"

    def test_hsum_defect_row(self):
        rep = check_framework("P6.2", FrameworkInputs(beta=0.1, dh_over_kappa=0.0, h_sum_defect=1e-9))
        assert not rep.satisfied

    def test_unknown_theorem(self):
        with pytest.raises(ValueError):
            check_framework("T9.9", FrameworkInputs(beta=0.1))

    @pytest.mark.parametrize("theorem", THEOREM_IDS)
    def test_satisfied_iff_all_slacks_nonnegative(self, theorem):
        rep = check_framework(theorem, FrameworkInputs(beta=0.1, diameter0=0.1, min_pair_inner0=0.5))
        assert rep.satisfied == all(m.slack >= 0 for m in rep.margins)
        assert rep.to_dict()["theorem_id"] == theorem


class TestRates:
    def test_aggregation_factor(self):
        assert aggregation_factor(0.3, 0.5) == pytest.approx(1 - 0.3 * (LAMBDA_0_3 - 0.25))

    def test_orbital_rates(self):
        assert orbital_rate_b(0.1, 0.12) == pytest.approx(math.sqrt(1 - 0.6 * (M_0_1 - 0.12)))
        assert orbital_rate_c(0.1, 0.12, 0.01) == pytest.approx(math.sqrt(1 - 0.6 * (M_0_1 - 0.14)))
        assert orbital_rate_b(0.1, 0.12) < 1
