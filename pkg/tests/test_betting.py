"""Tests for isoelastic certainty equivalents, the cascade decomposition and optimal bets."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lib.betting import (
    BettingProfile,
    OddsProfile,
    RiskCase,
    RiskVector,
    decompose_ice,
    decompose_ice_conditional,
    expected_multi_commodity_utility,
    invert_multi_commodity_utility,
    isoelastic_utility,
    kelly_bet,
    log_multi_ice_conditional,
    log_multi_ice_unconditional,
    multi_commodity_utility,
    multi_ice_unconditional,
    optimal_bets_conditional,
    optimal_bets_unconditional,
    orders_to_risk,
    risk_to_orders,
    side_info_gain,
    single_lottery_ice,
)
from lib.divergences import renyi_conditional, renyi_multivariate
from lib.errors import CascadeSingularityError, DimensionMismatchError, ExcludedLimitError, ValidationError
from lib.prob_core import CondPmf, JointPmf, Pmf, marginals_and_conditionals
from oracles.random_instances import random_cond, random_joint, random_odds, random_pmf, random_risk

P = Pmf([0.75, 0.25])
EVEN_ODDS = OddsProfile(np.array([[2.0, 2.0]]))


def _bets(*pmfs):
    return BettingProfile(tuple(pmfs))


# ═══════════════════════════════════════════════════════════════════
# Risk vectors and utilities
# ═══════════════════════════════════════════════════════════════════


class TestRisk:

    def test_cases(self):
        assert RiskVector((2.0, 1.5)).case is RiskCase.CASE_I
        assert RiskVector((0.6, 0.7)).case is RiskCase.CASE_II
        assert RiskVector((0.2, 0.3)).case is None

    def test_logarithmic_limit_excluded(self):
        with pytest.raises(ExcludedLimitError):
            RiskVector((1.0,))
        with pytest.raises(ExcludedLimitError):
            RiskVector((0.5, 1.5))

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            RiskVector((-0.5,))

    def test_orders_round_trip(self):
        for values in [(2.0,), (1.5, 3.0), (0.6, 0.8, 0.9)]:
            orders = risk_to_orders(RiskVector(values))
            assert sum(orders.alphas) == pytest.approx(1.0)
            np.testing.assert_allclose(orders_to_risk(orders).values, values)

    def test_case_two_orders(self):
        orders = risk_to_orders(RiskVector((0.5,)))
        np.testing.assert_allclose(orders.alphas, [2.0, -1.0])
        assert orders.pivot == 0

    def test_inadmissible_has_no_orders(self):
        with pytest.raises(ValidationError):
            risk_to_orders(RiskVector((0.0,)))

    def test_isoelastic_utility(self):
        assert isoelastic_utility(1.0, math.e) == pytest.approx(1.0)
        assert isoelastic_utility(0.0, 3.0) == pytest.approx(3.0)
        assert isoelastic_utility(2.0, 2.0) == pytest.approx(-0.5)

    def test_multi_commodity_inverse(self):
        risk = RiskVector((2.0, 0.5))
        value = multi_commodity_utility(risk, [1.7, 1.7])
        assert invert_multi_commodity_utility(risk, value) == pytest.approx(1.7)


# ═══════════════════════════════════════════════════════════════════
# Certainty equivalents
# ═══════════════════════════════════════════════════════════════════


class TestIce:

    def test_fixture(self):
        ice = multi_ice_unconditional(P, EVEN_ODDS, _bets(Pmf([0.634, 0.366])), RiskVector((2.0,)))
        assert ice == pytest.approx(1.0718, abs=1e-4)

    def test_constant_wealth(self):
        odds = OddsProfile.from_pmfs([Pmf([0.2, 0.3, 0.5])])
        ice = multi_ice_unconditional(Pmf([0.6, 0.3, 0.1]), odds, _bets(Pmf([0.2, 0.3, 0.5])), RiskVector((3.0,)))
        assert ice == pytest.approx(1.0)

    def test_matches_expected_utility(self, rng):
        p0, odds = random_pmf(rng, 3), random_odds(rng, 3, 2)
        bets = _bets(random_pmf(rng, 3), random_pmf(rng, 3))
        risk = RiskVector((2.5, 0.4))
        expected = expected_multi_commodity_utility(p0, odds, bets, risk)
        assert invert_multi_commodity_utility(risk, expected) == pytest.approx(
            multi_ice_unconditional(p0, odds, bets, risk), rel=1e-10)

    def test_zero_bet_on_possible_outcome(self):
        with pytest.raises(ValidationError):
            multi_ice_unconditional(P, EVEN_ODDS, _bets(Pmf([1.0, 0.0])), RiskVector((2.0,)))

    def test_zero_bet_on_impossible_outcome(self):
        ice = multi_ice_unconditional(Pmf([1.0, 0.0]), EVEN_ODDS, _bets(Pmf([1.0, 0.0])), RiskVector((2.0,)))
        assert ice == pytest.approx(2.0)

    def test_single_lottery_logarithmic(self):
        bet, log_ice = kelly_bet(P, [2.0, 2.0])
        assert bet.allclose(P)
        assert log_ice == pytest.approx(0.130812, abs=1e-6)
        assert math.log(single_lottery_ice(P, P, [2.0, 2.0], 1.0)) == pytest.approx(log_ice)

    def test_single_lottery_matches_multi(self):
        bet = Pmf([0.6, 0.4])
        assert single_lottery_ice(P, bet, [2.0, 2.0], 3.0) == pytest.approx(
            multi_ice_unconditional(P, EVEN_ODDS, _bets(bet), RiskVector((3.0,))))

    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatchError):
            multi_ice_unconditional(P, EVEN_ODDS, _bets(P, P), RiskVector((2.0,)))

    def test_fairness_classes(self):
        u = Pmf([0.5, 0.5])
        odds = OddsProfile.from_pmfs([u, u, u], [1.0, 1.25, 0.8])
        assert [odds.fairness_class(k) for k in range(3)] == ["fair", "sub-fair", "super-fair"]
        assert all(q.allclose(u) for q in odds.induced_pmfs)


# ═══════════════════════════════════════════════════════════════════
# Decomposition and optimal bets
# ═══════════════════════════════════════════════════════════════════


class TestDecomposition:

    def test_identity_on_random_games(self, rng):
        for case in ("I", "II") * 10:
            n, d = int(rng.integers(2, 5)), int(rng.integers(1, 4))
            risk = random_risk(rng, d, case=case)
            odds = random_odds(rng, n, d)
            report = decompose_ice(random_pmf(rng, n), odds, _bets(*(random_pmf(rng, n) for _ in range(d))), risk)
            assert report.slack == pytest.approx(0.0, abs=1e-9)

    def test_penalties_vanish_at_optimum(self, rng):
        p0, odds, risk = random_pmf(rng, 3), random_odds(rng, 3, 2), RiskVector((1.5, 2.5))
        best, value = optimal_bets_unconditional(p0, odds, risk)
        report = decompose_ice(p0, odds, best, risk)
        assert all(t.contribution == pytest.approx(0.0, abs=1e-10) for t in report.penalty_terms)
        assert report.log_ice == pytest.approx(value, abs=1e-10)

    def test_optimal_fixture(self):
        best, value = optimal_bets_unconditional(P, EVEN_ODDS, RiskVector((2.0,)))
        np.testing.assert_allclose(best.bets[0].mass, [0.634, 0.366], atol=5e-4)
        assert value == pytest.approx(0.069336, abs=1e-6)

    def test_all_lotteries_share_the_optimal_bet(self, rng):
        p0, odds = random_pmf(rng, 4), random_odds(rng, 4, 3)
        risk = RiskVector((1.2, 2.0, 3.0))
        best, _ = optimal_bets_unconditional(p0, odds, risk)
        orders = risk_to_orders(risk)
        target = p0.mass ** orders.alphas[0]
        for k, q in enumerate(odds.induced_pmfs):
            target = target * q.mass ** orders.alphas[k + 1]
        for bet in best.bets:
            np.testing.assert_allclose(bet.mass, target / target.sum(), rtol=1e-10)

    def test_optimal_value_is_divergence_plus_fairness(self, rng):
        p0 = random_pmf(rng, 3)
        odds = random_odds(rng, 3, 2)
        risk = RiskVector((0.7, 0.8))
        _, value = optimal_bets_unconditional(p0, odds, risk)
        orders = risk_to_orders(risk)
        fairness = sum(orders.alphas[k + 1] / (orders.alphas[0] - 1) * math.log(f) for k, f in enumerate(odds.fairness))
        assert value == pytest.approx(renyi_multivariate(orders, [p0, *odds.induced_pmfs]) + fairness)

    def test_zero_bet_on_possible_outcome_is_rejected(self):
        with pytest.raises((CascadeSingularityError, ValidationError)):
            decompose_ice(P, EVEN_ODDS, _bets(Pmf([1.0, 0.0])), RiskVector((2.0,)))

    def test_zero_probability_outcome_gets_no_bet(self):
        best, _ = optimal_bets_unconditional(Pmf([0.5, 0.5, 0.0]), OddsProfile(np.array([[3.0, 3.0, 3.0]])),
                                             RiskVector((2.0,)))
        assert best.bets[0].mass[2] == 0.0

    def test_report_json(self):
        report = decompose_ice(P, EVEN_ODDS, _bets(Pmf([0.6, 0.4])), RiskVector((2.0,)))
        payload = report.to_json()
        assert payload["conditional"] is False
        assert payload["recomposed"] == pytest.approx(payload["log_ice"])
        assert len(payload["penalty_terms"]) == 1

    @pytest.mark.parametrize("risk", [RiskVector((2.0,)), RiskVector((0.5,))])
    def test_zero_probability_outcome_decomposes(self, risk):
        p0 = Pmf([0.5, 0.5, 0.0])
        odds = OddsProfile(np.array([[3.0, 3.0, 3.0]]))
        best, value = optimal_bets_unconditional(p0, odds, risk)
        report = decompose_ice(p0, odds, best, risk)
        assert report.slack == pytest.approx(0.0, abs=1e-9)
        assert report.log_ice == pytest.approx(value, abs=1e-10)
        assert report.penalty_terms[0].penalty == pytest.approx(0.0, abs=1e-10)
        wasted = decompose_ice(p0, odds, _bets(Pmf([0.3, 0.3, 0.4])), risk)
        assert wasted.slack == pytest.approx(0.0, abs=1e-9)

    def test_cascade_targets_ignore_the_own_bet(self, rng):
        p0, odds, risk = random_pmf(rng, 3), random_odds(rng, 3, 2), RiskVector((1.5, 2.5))
        tail = random_pmf(rng, 3)
        first = decompose_ice(p0, odds, _bets(random_pmf(rng, 3), tail), risk)
        second = decompose_ice(p0, odds, _bets(random_pmf(rng, 3), tail), risk)
        for a, b in zip(first.cascade_targets, second.cascade_targets):
            np.testing.assert_allclose(a.mass, b.mass, atol=1e-12)

    def test_penalties_ignore_odds_scaling(self, rng):
        p0, odds, risk = random_pmf(rng, 3), random_odds(rng, 3, 2), RiskVector((1.5, 2.5))
        bets = _bets(random_pmf(rng, 3), random_pmf(rng, 3))
        scaled = OddsProfile(odds.odds * np.array([[1.7], [0.4]]), odds.outcomes)
        first = decompose_ice(p0, odds, bets, risk)
        second = decompose_ice(p0, scaled, bets, risk)
        for a, b in zip(first.penalty_terms, second.penalty_terms):
            assert a.penalty == pytest.approx(b.penalty, abs=1e-12)

    @pytest.mark.parametrize("case", ["I", "II"])
    def test_scale_covariance(self, rng, case):
        p0, odds, risk = random_pmf(rng, 3), random_odds(rng, 3, 2), random_risk(rng, 2, case=case)
        bets = _bets(random_pmf(rng, 3), random_pmf(rng, 3))
        c = np.array([1.7, 0.4])
        scaled = OddsProfile(odds.odds * c[:, None], odds.outcomes)
        factor = float(np.prod(c ** ((1.0 - risk.as_array()) / risk.exponent_sum)))
        assert multi_ice_unconditional(p0, scaled, bets, risk) == pytest.approx(
            multi_ice_unconditional(p0, odds, bets, risk) * factor, rel=1e-10)


class TestSideInformation:

    def test_bound_and_equality(self, rng):
        for case in ("I", "II") * 5:
            joint = random_joint(rng, 3, 2)
            odds, risk = random_odds(rng, 3, 2), random_risk(rng, 2, case=case)
            bets = BettingProfile((random_cond(rng, 2, 3), random_cond(rng, 2, 3)))
            assert decompose_ice_conditional(joint, odds, bets, risk).slack >= -1e-9
            best, value = optimal_bets_conditional(joint, odds, risk)
            at_best = decompose_ice_conditional(joint, odds, best, risk)
            assert at_best.slack == pytest.approx(0.0, abs=1e-9)
            assert log_multi_ice_conditional(joint, odds, best, risk) == pytest.approx(value, abs=1e-9)

    def test_independent_side_information_is_worthless(self, rng):
        joint = JointPmf.product(random_pmf(rng, 3), random_pmf(rng, 2))
        odds = random_odds(rng, 3, 1)
        assert side_info_gain(joint, odds, RiskVector((2.0,))) == pytest.approx(0.0, abs=1e-10)

    def test_nearly_deterministic_side_information(self):
        eps = 1e-6
        joint = JointPmf((1.0 - eps) * np.eye(2) / 2 + eps / 4)
        gain = side_info_gain(joint, EVEN_ODDS, RiskVector((2.0,)))
        expected = -math.log(0.5 * (math.sqrt(1.0 - eps / 2) + math.sqrt(eps / 2)) ** 2)
        assert gain == pytest.approx(expected, abs=1e-10)
        assert gain == pytest.approx(0.6917, abs=1e-4)

    def test_conditional_matches_unconditional_for_one_g(self, rng):
        p0 = random_pmf(rng, 3)
        odds, risk = random_odds(rng, 3, 2), RiskVector((1.5, 2.0))
        joint = JointPmf(p0.mass[:, None])
        _, with_g = optimal_bets_conditional(joint, odds, risk)
        _, without = optimal_bets_unconditional(p0, odds, risk)
        assert with_g == pytest.approx(without, abs=1e-12)

    def test_unobservable_g_gets_uniform_bet(self):
        joint = JointPmf([[0.5, 0.0], [0.5, 0.0]])
        best, _ = optimal_bets_conditional(joint, EVEN_ODDS, RiskVector((2.0,)))
        np.testing.assert_allclose(best.bets[0].mass[1], [0.5, 0.5])

    def test_conditional_needs_conditional_bets(self):
        joint = JointPmf([[0.5, 0.0], [0.25, 0.25]])
        with pytest.raises(ValidationError):
            log_multi_ice_unconditional(marginals_and_conditionals(joint).p_x, EVEN_ODDS,
                                        BettingProfile((CondPmf([[0.5, 0.5], [0.5, 0.5]]),)), RiskVector((2.0,)))

    @pytest.mark.parametrize("risk", [RiskVector((2.0,)), RiskVector((0.5,))])
    def test_zero_cell_decomposes_at_optimum(self, risk):
        joint = JointPmf([[0.5, 0.0], [0.25, 0.25]])
        best, value = optimal_bets_conditional(joint, EVEN_ODDS, risk)
        np.testing.assert_allclose(best.bets[0].mass[1], [0.0, 1.0], atol=1e-12)
        report = decompose_ice_conditional(joint, EVEN_ODDS, best, risk)
        assert report.slack == pytest.approx(0.0, abs=1e-9)
        assert report.log_ice == pytest.approx(value, abs=1e-9)

    def test_fair_odds_gain_is_a_divergence_difference(self, rng):
        for case in ("I", "II") * 3:
            joint = random_joint(rng, 3, 2)
            odds, risk = random_odds(rng, 3, 2, fair=True), random_risk(rng, 2, case=case)
            orders = risk_to_orders(risk)
            marg = marginals_and_conditionals(joint)
            conditional = renyi_conditional(orders, orders.alphas[0], [marg.cond, *odds.induced_pmfs], marg.p_g,
                                            pivot_override=0)
            unconditional = renyi_multivariate(orders, [marg.p_x, *odds.induced_pmfs], pivot_override=0)
            assert side_info_gain(joint, odds, risk) == pytest.approx(conditional - unconditional, abs=1e-9)


@settings(deadline=None, max_examples=30)
@given(seed=st.integers(min_value=0, max_value=100_000))
def test_optimum_beats_random_bets(seed):
    rng = np.random.default_rng(seed)
    n, d = 3, 2
    p0, odds, risk = random_pmf(rng, n), random_odds(rng, n, d), random_risk(rng, d)
    _, value = optimal_bets_unconditional(p0, odds, risk)
    bets = BettingProfile(tuple(random_pmf(rng, n) for _ in range(d)))
    assert log_multi_ice_unconditional(p0, odds, bets, risk) <= value + 1e-9
