"""Tests for multivariate and conditional Rényi divergences, the order path and data processing."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lib.divergences import (
    OrderCase,
    PathSpec,
    conditioning_dpi_check,
    dpi_check,
    kl_mixture_limit,
    lambda_grid,
    main_system_dpi_check,
    path_lower_bound,
    path_orders,
    renyi_bivariate,
    renyi_conditional,
    renyi_multivariate,
    sweep_path,
    tropical_limit,
    validate_orders,
)
from lib.errors import DimensionMismatchError, SingularPivotError, ValidationError
from lib.prob_core import CondPmf, Pmf, StochasticOp
from oracles.random_instances import random_cond, random_kernel, random_orders, random_pmf

P = Pmf([0.75, 0.25])
HALF = Pmf([0.5, 0.5])
QUBIT_COND = CondPmf([[2 / 3, 1 / 3], [0.0, 1.0]])


# ═══════════════════════════════════════════════════════════════════
# Orders
# ═══════════════════════════════════════════════════════════════════


class TestOrders:

    def test_case_one(self):
        orders = validate_orders([0.5, 0.25, 0.25])
        assert orders.case is OrderCase.CASE_I
        assert orders.pivot == 0

    def test_case_two(self):
        orders = validate_orders([-0.5, 2.0, -0.5])
        assert orders.case is OrderCase.CASE_II
        assert orders.pivot == 1
        assert orders.alpha_star == 2.0

    def test_ties_pick_lowest_index(self):
        assert validate_orders([0.25, 0.5, 0.25]).pivot == 1
        assert validate_orders([0.5, 0.5]).pivot == 0

    def test_sum_must_be_one(self):
        with pytest.raises(ValidationError):
            validate_orders([0.5, 0.6])

    @pytest.mark.parametrize("alphas", [[1.5, 0.5, -1.0], [2.0, -2.0, 1.0], [0.5, 0.75, -0.25]])
    def test_inadmissible(self, alphas):
        with pytest.raises(ValidationError):
            validate_orders(alphas)


# ═══════════════════════════════════════════════════════════════════
# Unconditional divergences
# ═══════════════════════════════════════════════════════════════════


class TestRenyi:

    def test_bivariate_order_two(self):
        assert renyi_bivariate(2.0, P, HALF) == pytest.approx(0.223144, abs=1e-6)

    def test_kl(self):
        assert renyi_bivariate(1.0, P, HALF) == pytest.approx(0.130812, abs=1e-6)

    def test_multivariate_fixture(self):
        assert renyi_multivariate([0.5, 0.25, 0.25], [P, HALF, HALF]) == pytest.approx(0.069336, abs=1e-6)

    def test_equal_arguments_vanish(self, rng):
        p = random_pmf(rng, 4)
        for alphas in ([0.5, 0.3, 0.2], [1.8, -0.5, -0.3]):
            assert renyi_multivariate(alphas, [p, p, p]) == pytest.approx(0.0, abs=1e-12)

    def test_singular_pivot(self):
        with pytest.raises(SingularPivotError):
            renyi_multivariate([1.0, 0.0], [P, HALF])

    def test_case_two_zero_mass_is_infinite(self):
        assert renyi_multivariate([2.0, -1.0], [P, Pmf([1.0, 0.0])]) == math.inf

    def test_disjoint_supports_are_infinite(self):
        assert renyi_multivariate([0.5, 0.5], [Pmf([1.0, 0.0]), Pmf([0.0, 1.0])]) == math.inf

    def test_zero_order_ignores_zero_mass(self):
        # 0^0 = 1: a zero order contributes a factor one even on zero mass
        value = renyi_multivariate([0.5, 0.5, 0.0], [P, HALF, Pmf([1.0, 0.0])])
        assert value == pytest.approx(renyi_bivariate(0.5, P, HALF))

    def test_bivariate_reduces_to_multivariate(self):
        assert renyi_bivariate(0.7, P, HALF) == pytest.approx(renyi_multivariate([0.7, 0.3], [P, HALF]))
        assert renyi_bivariate(2.0, P, HALF) == pytest.approx(renyi_multivariate([2.0, -1.0], [P, HALF]))

    def test_pivot_override(self):
        # α_1 is the largest order, the override rescales by α_0 instead
        orders = validate_orders([0.25, 0.75])
        default = renyi_multivariate(orders, [P, HALF])
        overridden = renyi_multivariate(orders, [P, HALF], pivot_override=0)
        assert overridden == pytest.approx(default * (0.75 - 1.0) / (0.25 - 1.0))

    def test_mismatched_outcomes(self):
        with pytest.raises(DimensionMismatchError):
            renyi_multivariate([0.5, 0.5], [P, Pmf([0.5, 0.5], ["a", "b"])])


# ═══════════════════════════════════════════════════════════════════
# Conditional divergence
# ═══════════════════════════════════════════════════════════════════


class TestConditional:

    def test_qubit_fixture(self):
        value = renyi_conditional([0.5, 0.5], 0.5, [QUBIT_COND, HALF], P)
        assert value == pytest.approx(0.158358, abs=1e-6)
        assert math.exp(value) == pytest.approx(1.1716, abs=1e-4)

    def test_g_independent_reduces_to_unconditional(self, rng):
        p, q, r = (random_pmf(rng, 3) for _ in range(3))
        p_g = random_pmf(rng, 4)
        for beta in (0.3, 1.0, 2.5):
            value = renyi_conditional([0.6, 0.3, 0.1], beta, [p, q, r], p_g)
            assert value == pytest.approx(renyi_multivariate([0.6, 0.3, 0.1], [p, q, r]), abs=1e-12)

    def test_beta_must_be_positive(self):
        with pytest.raises(ValidationError):
            renyi_conditional([0.5, 0.5], 0.0, [QUBIT_COND, HALF], P)

    def test_p_g_needs_full_support(self):
        with pytest.raises(ValidationError):
            renyi_conditional([0.5, 0.5], 0.5, [QUBIT_COND, HALF], Pmf([1.0, 0.0]))


# ═══════════════════════════════════════════════════════════════════
# Order path
# ═══════════════════════════════════════════════════════════════════


class TestPath:

    def test_limits_on_fixture(self):
        assert kl_mixture_limit([1.0], [P, HALF]) == pytest.approx(0.130812, abs=1e-6)
        assert tropical_limit([1.0], [P, HALF]) == pytest.approx(math.log(1.5), abs=1e-12)

    def test_lower_bound(self):
        assert path_lower_bound([0.5, 0.5]) == pytest.approx(1 / 3)
        with pytest.raises(ValidationError):
            PathSpec((0.5, 0.5), 0.2)

    def test_lambda_one_excluded(self):
        with pytest.raises(ValidationError):
            PathSpec((1.0,), 1.0)

    def test_path_orders_pivot_on_first(self):
        orders = path_orders(PathSpec((0.3, 0.7), 2.0))
        assert orders.pivot == 0
        np.testing.assert_allclose(orders.alphas, [2.0, -0.3, -0.7])

    def test_grid_skips_one(self):
        grid = lambda_grid([1.0], 0.5, 1.5, 3)
        assert 1.0 not in grid
        assert grid[1] == pytest.approx(1.0, abs=1e-5)

    def test_sweep_is_monotone_and_bounded(self, rng):
        pmfs = [random_pmf(rng, 3) for _ in range(3)]
        gammas = [0.4, 0.6]
        rows = sweep_path(pmfs, gammas, lambda_grid(gammas, None, 8.0, 40))
        values = [r.divergence for r in rows]
        assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))
        assert all(v <= rows[0].tropical_limit + 1e-9 for v in values)

    def test_path_approaches_kl_at_one(self, rng):
        pmfs = [random_pmf(rng, 4) for _ in range(2)]
        near = renyi_multivariate(path_orders(PathSpec((1.0,), 1.0 + 1e-6)), pmfs)
        assert near == pytest.approx(kl_mixture_limit([1.0], pmfs), abs=1e-4)


# ═══════════════════════════════════════════════════════════════════
# Data processing
# ═══════════════════════════════════════════════════════════════════


class TestDataProcessing:

    def test_identity_kernel_changes_nothing(self):
        report = dpi_check([0.5, 0.25, 0.25], [P, HALF, HALF], StochasticOp.identity(2))
        assert report.slack == pytest.approx(0.0)
        assert report.holds

    def test_constant_kernel_erases_everything(self):
        report = dpi_check([0.5, 0.5], [P, HALF], StochasticOp.constant(2, Pmf([0.3, 0.7])))
        assert report.after == pytest.approx(0.0, abs=1e-12)
        assert report.holds

    def test_random_instances(self, rng):
        for _ in range(30):
            orders = random_orders(rng, 2)
            pmfs = [random_pmf(rng, 4) for _ in range(3)]
            assert dpi_check(orders, pmfs, random_kernel(rng, 4, 3)).holds

    def test_main_system(self, rng):
        for _ in range(20):
            orders = random_orders(rng, 2)
            p_g = random_pmf(rng, 3)
            conds = [random_cond(rng, 3, 4) for _ in range(3)]
            kernels = [random_kernel(rng, 4, 2) for _ in range(3)]
            assert main_system_dpi_check(orders, 0.7, conds, p_g, kernels).holds

    def test_main_system_needs_kernel_per_g(self, rng):
        with pytest.raises(DimensionMismatchError):
            main_system_dpi_check([0.5, 0.5], 1.0, [QUBIT_COND, HALF], P, [StochasticOp.identity(2)])

    def test_conditioning(self, rng):
        for _ in range(20):
            orders = random_orders(rng, 2, pivot_zero=True)
            p_g = random_pmf(rng, 3)
            report = conditioning_dpi_check(orders, random_cond(rng, 3, 4), [random_pmf(rng, 4) for _ in range(2)],
                                            p_g, random_kernel(rng, 3, 2))
            assert report.holds
            assert report.unconditional_holds

    def test_conditioning_requires_first_pivot(self):
        with pytest.raises(ValidationError):
            conditioning_dpi_check([0.25, 0.75], QUBIT_COND, [HALF], P, StochasticOp.identity(2))


@settings(deadline=None, max_examples=40)
@given(alpha=st.floats(min_value=0.05, max_value=4.0).filter(lambda a: abs(a - 1.0) > 1e-3),
       seed=st.integers(min_value=0, max_value=10_000))
def test_bivariate_is_nonnegative(alpha, seed):
    rng = np.random.default_rng(seed)
    p, q = random_pmf(rng, 3), random_pmf(rng, 3)
    assert renyi_bivariate(alpha, p, q) >= -1e-12


@settings(deadline=None, max_examples=40)
@given(seed=st.integers(min_value=0, max_value=10_000), d=st.integers(min_value=1, max_value=3))
def test_vanishes_exactly_on_equal_arguments(seed, d):
    rng = np.random.default_rng(seed)
    orders = random_orders(rng, d)
    n = d + 1
    p = random_pmf(rng, n)
    assert abs(renyi_multivariate(orders, [p] * n)) < 1e-9
    # each argument leans on its own outcome, so every pair is far apart in total variation
    spread = [Pmf(0.6 * np.eye(n)[k] + 0.4 / n) for k in range(n)]
    value = renyi_multivariate(orders, spread)
    assert value >= -1e-12
    assert value > 1e-9
