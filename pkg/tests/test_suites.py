"""The verify-all suites on small instance counts."""
import math

import pytest

from cli import suites
from lib.errors import ValidationError
from lib.prob_core import marginals_and_conditionals

SMALL_COUNTS = {
    "decomposition": 20,
    "optimality": 4,
    "fixtures": 1,
    "dpi": 10,
    "monotonicity": 3,
    "monte_carlo": 3,
    "resource_axioms": 10,
    "sd_reduction": 5,
    "side_info": 10,
}


@pytest.fixture
def suite_cfg(small_cfg):
    # the cut-down search only gets close to the optimum
    return small_cfg.with_overrides(tolerances={"oracle_recovery": 5e-3})


@pytest.mark.parametrize("name", sorted(SMALL_COUNTS))
def test_suite_passes(name, suite_cfg):
    result = suites.SUITES[name](42, suite_cfg, count=SMALL_COUNTS[name], progress=False)
    assert result.checks > 0
    assert result.passed, result.failures
    assert result.worst_slack >= 0.0


def test_same_seed_same_checks(suite_cfg):
    first = suites.decomposition(7, suite_cfg, count=5, progress=False)
    second = suites.decomposition(7, suite_cfg, count=5, progress=False)
    assert (first.checks, first.worst_slack) == (second.checks, second.worst_slack)


def test_run_suites_in_order(suite_cfg):
    results = suites.run_suites(42, suite_cfg, ["fixtures", "sd_reduction"], {"sd_reduction": 2}, progress=False)
    assert [r.name for r in results] == ["fixtures", "sd_reduction"]


def test_unknown_suite(suite_cfg):
    with pytest.raises(ValidationError):
        suites.run_suites(42, suite_cfg, ["nope"])


class TestSuiteResult:

    def test_identity_and_inequality_slack(self):
        result = suites.SuiteResult("demo")
        result.identity(1.0, 1.0 + 1e-10, 1e-9, "close")
        result.at_least(math.inf, 5.0, 0.0, "infinite")
        result.at_least(1.0, 2.0, 1e-9, "short")
        assert result.checks == 3
        assert result.violations == 1
        assert not result.passed
        assert result.failures[0].startswith("short")

    def test_nan_is_a_violation(self):
        result = suites.SuiteResult("demo")
        result.record(math.nan, "nan")
        assert result.violations == 1
        assert result.to_json()["worst_slack"] is None

    def test_empty_suite_does_not_pass(self):
        assert not suites.SuiteResult("empty").passed


def test_correlated_joint():
    marg = marginals_and_conditionals(suites.correlated_joint(3, 0.3))
    assert marg.p_x.allclose(marg.p_g)
    assert marg.cond.mass[0, 0] > marg.cond.mass[0, 1]
