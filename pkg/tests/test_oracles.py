"""Oracles checked against the closed forms they are meant to audit."""
import math

import mpmath as mp
import numpy as np
import pytest

from cli.suites import qubit_fixture
from lib.betting import (
    BettingProfile,
    OddsProfile,
    RiskVector,
    multi_ice_conditional,
    multi_ice_unconditional,
    optimal_bets_conditional,
    optimal_bets_unconditional,
    risk_to_orders,
)
from lib.divergences import renyi_multivariate
from lib.errors import GuardExceededError, ValidationError
from lib.gpt_betting import (
    Measurement,
    StateEnsemble,
    build_classical,
    build_quantum,
    sb_risk_neutral_value,
    sd_success,
)
from lib.prob_core import JointPmf, Pmf
from oracles.brute_force import brute_force_optimal_bets, lattice_steps, simplex_lattice
from oracles.high_precision import FIXTURES, hp_renyi_multivariate, reference_values
from oracles.monte_carlo import monte_carlo_ice
from oracles.postprocessing import exhaustive_postprocessing, exhaustive_risk_neutral_sb
from oracles.random_instances import (
    random_cond,
    random_density,
    random_ensemble,
    random_instance,
    random_joint,
    random_measurement,
    random_odds,
    random_pmf,
    random_povm,
    random_risk,
    spawn_rngs,
)

P = Pmf([0.75, 0.25])
EVEN_ODDS = OddsProfile(np.array([[2.0, 2.0]]))


# ═══════════════════════════════════════════════════════════════════
# Brute force
# ═══════════════════════════════════════════════════════════════════


class TestBruteForce:

    def test_lattice(self):
        lattice = simplex_lattice(3, 4)
        assert lattice.shape == (15, 3)
        np.testing.assert_allclose(lattice.sum(axis=1), 1.0)

    def test_budget_coarsens_grid(self, small_cfg):
        assert lattice_steps(2, small_cfg) == 50
        assert math.comb(lattice_steps(4, small_cfg) + 3, 3) <= small_cfg.grid_budget

    def test_fixture(self, small_cfg):
        result = brute_force_optimal_bets(P, EVEN_ODDS, RiskVector((2.0,)), small_cfg)
        assert result.log_ice == pytest.approx(0.069336, abs=1e-4)
        np.testing.assert_allclose(result.bets.bets[0].mass, [0.634, 0.366], atol=1e-2)

    @pytest.mark.parametrize("case", ["I", "II"])
    def test_recovers_closed_form(self, small_cfg, rng, case):
        p0 = random_pmf(rng, 3)
        odds, risk = random_odds(rng, 3, 2), random_risk(rng, 2, case=case)
        _, closed = optimal_bets_unconditional(p0, odds, risk)
        found = brute_force_optimal_bets(p0, odds, risk, small_cfg.with_overrides(seed=7))
        assert found.log_ice <= closed + 1e-9
        assert found.log_ice == pytest.approx(closed, abs=1e-3)

    def test_side_information(self, small_cfg):
        joint = JointPmf([[0.4, 0.1], [0.1, 0.4]])
        _, closed = optimal_bets_conditional(joint, EVEN_ODDS, RiskVector((3.0,)))
        found = brute_force_optimal_bets(joint, EVEN_ODDS, RiskVector((3.0,)), small_cfg)
        assert found.bets.conditional
        assert found.log_ice == pytest.approx(closed, abs=1e-3)

    def test_guard(self, small_cfg):
        with pytest.raises(GuardExceededError):
            brute_force_optimal_bets(Pmf.uniform(5), OddsProfile(np.full((1, 5), 5.0)), RiskVector((2.0,)), small_cfg)


# ═══════════════════════════════════════════════════════════════════
# Monte Carlo
# ═══════════════════════════════════════════════════════════════════


class TestMonteCarlo:

    def test_fixture(self, small_cfg):
        bets = BettingProfile((Pmf([0.634, 0.366]),))
        exact = multi_ice_unconditional(P, EVEN_ODDS, bets, RiskVector((2.0,)))
        mc = monte_carlo_ice(P, EVEN_ODDS, bets, RiskVector((2.0,)), small_cfg)
        assert mc.samples == small_cfg.mc_samples
        assert abs(mc.estimate - exact) <= 4 * mc.stderr + 1e-12

    def test_same_seed_same_estimate(self, small_cfg):
        bets = BettingProfile((Pmf([0.5, 0.5]),))
        first = monte_carlo_ice(P, EVEN_ODDS, bets, RiskVector((0.5,)), small_cfg)
        second = monte_carlo_ice(P, EVEN_ODDS, bets, RiskVector((0.5,)), small_cfg)
        assert first == second

    def test_conditional_game(self, small_cfg, rng):
        joint, odds, risk = random_joint(rng, 3, 2), random_odds(rng, 3, 2), RiskVector((2.0, 1.5))
        bets = BettingProfile((random_cond(rng, 2, 3), random_cond(rng, 2, 3)))
        exact = multi_ice_conditional(joint, odds, bets, risk)
        mc = monte_carlo_ice(joint, odds, bets, risk, small_cfg)
        assert abs(mc.estimate - exact) <= 4 * mc.stderr + 1e-12

    def test_conditional_game_needs_conditional_bets(self, small_cfg):
        joint = JointPmf([[0.5, 0.0], [0.25, 0.25]])
        with pytest.raises(ValidationError):
            monte_carlo_ice(joint, EVEN_ODDS, BettingProfile((P,)), RiskVector((2.0,)), small_cfg)


# ═══════════════════════════════════════════════════════════════════
# Postprocessing enumeration
# ═══════════════════════════════════════════════════════════════════


class TestPostprocessing:

    def test_qubit(self):
        _, ensemble, measurement = qubit_fixture()
        best = exhaustive_postprocessing(measurement, ensemble)
        assert best.mapping == (0, 1)
        assert best.value == pytest.approx(0.75)
        assert exhaustive_risk_neutral_sb(measurement, ensemble, [2.0, 2.0]).value == pytest.approx(1.5)

    @pytest.mark.parametrize("model", [build_classical(3), build_quantum(2)], ids=["classical", "quantum"])
    def test_matches_map_guess(self, model, rng):
        for _ in range(10):
            ensemble = random_ensemble(model, rng, 3)
            measurement = random_measurement(model, rng, 3)
            assert exhaustive_postprocessing(measurement, ensemble).value == pytest.approx(
                sd_success(measurement, ensemble), abs=1e-12)
            odds = rng.uniform(1.0, 4.0, size=3)
            assert exhaustive_risk_neutral_sb(measurement, ensemble, odds).value == pytest.approx(
                sb_risk_neutral_value(measurement, ensemble, odds), abs=1e-12)

    def test_guard(self):
        model = build_classical(4)
        ensemble = StateEnsemble(Pmf.uniform(4), np.eye(4))
        measurement = Measurement(model, np.full((10, 4), 0.1))
        with pytest.raises(GuardExceededError):
            exhaustive_postprocessing(measurement, ensemble)


# ═══════════════════════════════════════════════════════════════════
# High precision
# ═══════════════════════════════════════════════════════════════════


class TestHighPrecision:

    @pytest.mark.parametrize("name, value, expected, tolerance", reference_values(), ids=[f.name for f in FIXTURES])
    def test_fixture(self, name, value, expected, tolerance):
        assert abs(float(value) - expected) <= tolerance

    def test_agrees_with_float_path(self, rng):
        pmfs = [random_pmf(rng, 4) for _ in range(3)]
        for alphas in ([0.5, 0.3, 0.2], [2.0, -0.4, -0.6]):
            reference = hp_renyi_multivariate(alphas, [p.mass.tolist() for p in pmfs])
            assert float(reference) == pytest.approx(renyi_multivariate(alphas, pmfs), abs=1e-12)

    def test_zero_to_the_zero(self):
        value = hp_renyi_multivariate([0.5, 0.5, 0], [["3/4", "1/4"], ["1/2", "1/2"], [1, 0]])
        assert value == mp.mpf(hp_renyi_multivariate([0.5, 0.5], [["3/4", "1/4"], ["1/2", "1/2"]]))


# ═══════════════════════════════════════════════════════════════════
# Random instances
# ═══════════════════════════════════════════════════════════════════


class TestRandomInstances:

    def test_same_seed_same_draws(self):
        first = random_instance("pmf", (4,), np.random.default_rng(42))
        second = random_instance("pmf", (4,), np.random.default_rng(42))
        np.testing.assert_array_equal(first.mass, second.mass)

    def test_spawned_generators_differ(self):
        a, b = spawn_rngs(42, 2)
        assert a.random() != b.random()

    def test_risk_vectors_map_to_orders(self, rng):
        for _ in range(500):
            risk = random_instance("risk", (int(rng.integers(1, 4)),), rng)
            assert risk.case is not None
            assert sum(risk_to_orders(risk).alphas) == pytest.approx(1.0)

    def test_fair_odds(self, rng):
        odds = random_odds(rng, 3, 2, fair=True)
        np.testing.assert_allclose(odds.fairness, 1.0, atol=1e-12)

    def test_dispatch(self, rng):
        assert random_instance("joint", (3, 2), rng).mass.shape == (3, 2)
        assert random_instance("kernel", (3, 2), rng).matrix.shape == (2, 3)
        assert random_instance("odds", (3, 2), rng).d == 2
        assert random_instance("orders", (2,), rng).d_plus_one == 3
        with pytest.raises(ValidationError):
            random_instance("horse", (2,), rng)

    def test_quantum_draws_are_valid(self, rng):
        model = build_quantum(3)
        effects = random_povm(rng, 3, 4)
        np.testing.assert_allclose(sum(effects), np.eye(3), atol=1e-10)
        rho = random_density(rng, 3)
        assert np.linalg.eigvalsh(rho).min() >= -1e-12
        random_ensemble(model, rng, 2).check_model(model)
