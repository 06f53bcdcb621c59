# cli/suites.py
"""Seeded property suites behind ``verify-all``.

Every suite draws its instances from ``spawn_rngs(seed, count)`` and records one slack
per check: a check passes when its slack is nonnegative. For an identity the slack is
tolerance − |error|; for an inequality it is the margin plus the tolerance.
"""
import functools
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from rich.table import Table
from tqdm import tqdm

from lib.betting import (
    BettingProfile,
    OddsProfile,
    RiskVector,
    decompose_ice,
    decompose_ice_conditional,
    log_multi_ice_conditional,
    log_multi_ice_unconditional,
    multi_ice_conditional,
    multi_ice_unconditional,
    optimal_bets_conditional,
    optimal_bets_unconditional,
    orders_to_risk,
    side_info_gain,
)
from lib.config import OracleConfig
from lib.divergences import (
    conditioning_dpi_check,
    dpi_check,
    kl_mixture_limit,
    lambda_grid,
    main_system_dpi_check,
    path_orders,
    PathSpec,
    renyi_bivariate,
    renyi_conditional,
    renyi_multivariate,
    sweep_path,
    tropical_limit,
)
from lib.errors import RenyiBetError, ValidationError
from lib.gpt_betting import (
    GptModel,
    Measurement,
    StateEnsemble,
    advantage_ratio,
    build_classical,
    build_quantum,
    informativeness_monotone,
    map_postprocessing,
    outcome_joint,
    postprocess_measurement,
    sb_risk_neutral_value,
    sd_success,
    uninformative,
)
from lib.log import console, get_logger
from lib.prob_core import CondPmf, JointPmf, Pmf
from oracles.brute_force import MAX_ALPHABET, MAX_LOTTERIES, brute_force_optimal_bets
from oracles.high_precision import FIXTURES
from oracles.monte_carlo import monte_carlo_ice
from oracles.postprocessing import exhaustive_risk_neutral_sb
from oracles.random_instances import (
    random_cond,
    random_ensemble,
    random_joint,
    random_kernel,
    random_measurement,
    random_odds,
    random_orders,
    random_pmf,
    random_risk,
    spawn_rngs,
)

log = get_logger(__name__)

DEFAULT_COUNTS: Dict[str, int] = {
    "decomposition": 500,
    "optimality": 100,
    "fixtures": 1,
    "dpi": 200,
    "monotonicity": 20,
    "monte_carlo": 20,
    "resource_axioms": 200,
    "sd_reduction": 50,
    "side_info": 500,
}


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    violations: int = 0
    worst_slack: float = math.inf
    seconds: float = 0.0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checks > 0 and self.violations == 0

    def record(self, slack: float, label: str) -> None:
        self.checks += 1
        if math.isnan(slack):
            slack = -math.inf
        self.worst_slack = min(self.worst_slack, slack)
        if slack < 0:
            self.violations += 1
            if len(self.failures) < 10:
                self.failures.append(f"{label}: slack {slack!r}")
            log.debug("%s failed %s with slack %s", self.name, label, slack)

    def fail(self, label: str, err: Exception) -> None:
        self.checks += 1
        self.violations += 1
        self.worst_slack = -math.inf
        if len(self.failures) < 10:
            self.failures.append(f"{label}: {err}")

    def identity(self, value: float, expected: float, tol: float, label: str) -> None:
        self.record(tol - abs(value - expected), label)

    def at_least(self, value: float, bound: float, tol: float, label: str) -> None:
        """value ≥ bound − tol; an infinite value dominates any bound."""
        if value == math.inf:
            self.record(math.inf, label)
        else:
            self.record(value - bound + tol, label)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "violations": self.violations,
            "worst_slack": self.worst_slack if math.isfinite(self.worst_slack) else None,
            "seconds": self.seconds,
            "failures": list(self.failures),
        }


def _instances(name: str, seed: int, count: int, progress: bool):
    return enumerate(tqdm(spawn_rngs(seed, count), desc=name, file=sys.stderr, leave=False, disable=not progress))


def _guarded(result: SuiteResult, label: str, check: Callable[[], None]) -> None:
    """Run one check; a library error counts as a violation instead of stopping the suite."""
    try:
        check()
    except RenyiBetError as err:
        result.fail(label, err)


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs) -> SuiteResult:
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        log.info("%s: %d checks, %d violations in %.2fs", result.name, result.checks, result.violations, result.seconds)
        return result
    return wrapper


def _random_bets(rng: np.random.Generator, n: int, d: int, n_given: Optional[int] = None) -> BettingProfile:
    if n_given is None:
        return BettingProfile(tuple(random_pmf(rng, n) for _ in range(d)))
    return BettingProfile(tuple(random_cond(rng, n_given, n) for _ in range(d)))


# ---- BETTING IDENTITIES ----

@_timed
def decomposition(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["decomposition"],
                  progress: bool = True) -> SuiteResult:
    """
    Exact decomposition of log ICE without side information, and the side-information
    bound: nonnegative slack for arbitrary conditional bets, zero slack at the optimum.
    """
    result = SuiteResult("decomposition")
    tol = cfg.tolerance("identity")
    for i, rng in _instances(result.name, seed, count, progress):
        n, d, n_g = int(rng.integers(2, 5)), int(rng.integers(1, 4)), int(rng.integers(2, 4))
        risk = random_risk(rng, d, case="I" if i % 2 == 0 else "II")
        odds = random_odds(rng, n, d, fair=bool(rng.random() < 0.5))
        p0 = random_pmf(rng, n)

        def unconditional() -> None:
            report = decompose_ice(p0, odds, _random_bets(rng, n, d), risk)
            result.identity(report.recomposed, report.log_ice, tol, f"instance {i} identity")

        def conditional() -> None:
            joint = random_joint(rng, n, n_g)
            report = decompose_ice_conditional(joint, odds, _random_bets(rng, n, d, n_g), risk)
            result.at_least(report.recomposed, report.log_ice, tol, f"instance {i} side-information bound")
            best, value = optimal_bets_conditional(joint, odds, risk)
            at_optimum = decompose_ice_conditional(joint, odds, best, risk)
            result.identity(at_optimum.recomposed, at_optimum.log_ice, tol, f"instance {i} bound at optimum")
            result.identity(at_optimum.log_ice, value, tol, f"instance {i} optimal value")

        _guarded(result, f"instance {i} identity", unconditional)
        _guarded(result, f"instance {i} conditional", conditional)
    return result


@_timed
def optimality(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["optimality"],
               progress: bool = True) -> SuiteResult:
    """Closed-form optima against the lattice and Dirichlet search, with and without side information."""
    result = SuiteResult("optimality")
    beat_tol, recovery_tol = cfg.tolerance("optimality"), cfg.tolerance("oracle_recovery")
    for i, rng in _instances(result.name, seed, count, progress):
        n, d = int(rng.integers(2, MAX_ALPHABET + 1)), int(rng.integers(1, MAX_LOTTERIES + 1))
        n_g = int(rng.integers(2, MAX_ALPHABET + 1))
        risk = random_risk(rng, d, max_r=3.0)
        odds = random_odds(rng, n, d)
        p0, joint = random_pmf(rng, n), random_joint(rng, n, n_g)
        instance_cfg = cfg.with_overrides(seed=int(rng.integers(2 ** 31)))

        def compare(label: str, game, value: float, achieved: float) -> None:
            oracle = brute_force_optimal_bets(game, odds, risk, instance_cfg)
            result.identity(achieved, value, cfg.tolerance("identity"), f"instance {i} {label} attained")
            result.at_least(value, oracle.log_ice, beat_tol, f"instance {i} {label} beats oracle")
            result.identity(float(np.exp(oracle.log_ice)), float(np.exp(value)), recovery_tol,
                            f"instance {i} {label} oracle recovers optimum")

        def unconditional() -> None:
            bets, value = optimal_bets_unconditional(p0, odds, risk)
            compare("unconditional", p0, value, log_multi_ice_unconditional(p0, odds, bets, risk))

        def conditional() -> None:
            bets, value = optimal_bets_conditional(joint, odds, risk)
            compare("conditional", joint, value, log_multi_ice_conditional(joint, odds, bets, risk))

        _guarded(result, f"instance {i} unconditional", unconditional)
        _guarded(result, f"instance {i} conditional", conditional)
    return result


# ---- FIXTURES ----

_P = Pmf([0.75, 0.25])
_HALF = Pmf([0.5, 0.5])
_QUBIT_COND = CondPmf([[2.0 / 3.0, 1.0 / 3.0], [0.0, 1.0]])


def qubit_fixture() -> tuple:
    """|0⟩ and |+⟩ with equal priors, measured in the computational basis."""
    model = build_quantum(2)
    plus = np.full((2, 2), 0.5)
    zero = np.diag([1.0, 0.0])
    ensemble = StateEnsemble(Pmf([0.5, 0.5]), np.stack([model.embed_density(zero), model.embed_density(plus)]))
    measurement = Measurement(model, model.embed_povm([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
    return model, ensemble, measurement


def _qubit_advantage() -> float:
    _, ensemble, measurement = qubit_fixture()
    return advantage_ratio(measurement, ensemble, OddsProfile(np.array([[2.0, 2.0]])), RiskVector((2.0,)))


LIBRARY_FIXTURES: Dict[str, Callable[[], float]] = {
    "renyi_bivariate_alpha2": lambda: renyi_bivariate(2.0, _P, _HALF),
    "kl": lambda: renyi_bivariate(1.0, _P, _HALF),
    "renyi_multivariate_three": lambda: renyi_multivariate([0.5, 0.25, 0.25], [_P, _HALF, _HALF]),
    "renyi_conditional_qubit": lambda: renyi_conditional([0.5, 0.5], 0.5, [_QUBIT_COND, _HALF], _P),
    "kl_mixture": lambda: kl_mixture_limit([1.0], [_P, _HALF]),
    "tropical_d1": lambda: tropical_limit([1.0], [_P, _HALF]),
    "ice_r2_rounded_bet": lambda: multi_ice_unconditional(
        _P, OddsProfile(np.array([[2.0, 2.0]])), BettingProfile((Pmf([0.634, 0.366]),)), RiskVector((2.0,))),
    "advantage_ratio_qubit": _qubit_advantage,
}

# library and 50-digit values agree far below the published rounding
HIGH_PRECISION_AGREEMENT = 1e-9


@_timed
def fixtures(seed: int, cfg: OracleConfig, count: int = 1, progress: bool = True) -> SuiteResult:
    """Published values, first from the high-precision references, then from the library."""
    result = SuiteResult("fixtures")
    for fixture in tqdm(FIXTURES, desc=result.name, file=sys.stderr, leave=False, disable=not progress):
        reference = float(fixture.reference())
        result.identity(reference, fixture.expected, fixture.tolerance, f"{fixture.name} reference")

        def check() -> None:
            value = LIBRARY_FIXTURES[fixture.name]()
            result.identity(value, fixture.expected, fixture.tolerance, f"{fixture.name} library")
            result.identity(value, reference, HIGH_PRECISION_AGREEMENT, f"{fixture.name} library vs reference")

        _guarded(result, fixture.name, check)
    return result


# ---- DATA PROCESSING ----

@_timed
def dpi(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["dpi"], progress: bool = True) -> SuiteResult:
    """Postprocessing every argument, the main system per g, and the conditioning variable."""
    result = SuiteResult("dpi")
    tol = cfg.tolerance("inequality")
    for i, rng in _instances(result.name, seed, count, progress):
        n, m, d = int(rng.integers(2, 5)), int(rng.integers(2, 5)), int(rng.integers(1, 4))
        n_g, n_h = int(rng.integers(2, 4)), int(rng.integers(2, 4))

        def plain() -> None:
            orders = random_orders(rng, d)
            report = dpi_check(orders, [random_pmf(rng, n) for _ in range(d + 1)], random_kernel(rng, n, m))
            result.at_least(report.before, report.after, tol, f"instance {i} postprocessing")

        def main_system() -> None:
            orders = random_orders(rng, d)
            p_g = random_pmf(rng, n_g)
            conds = [random_cond(rng, n_g, n) for _ in range(d + 1)]
            kernels = [random_kernel(rng, n, m) for _ in range(n_g)]
            report = main_system_dpi_check(orders, float(rng.uniform(0.2, 3.0)), conds, p_g, kernels)
            result.at_least(report.before, report.after, tol, f"instance {i} main system")

        def conditioning() -> None:
            orders = random_orders(rng, d, pivot_zero=True)
            p_g = random_pmf(rng, n_g)
            report = conditioning_dpi_check(orders, random_cond(rng, n_g, n), [random_pmf(rng, n) for _ in range(d)],
                                            p_g, random_kernel(rng, n_g, n_h))
            result.at_least(report.before, report.after, tol, f"instance {i} conditioning variable")
            result.at_least(report.before, report.unconditional, tol, f"instance {i} conditioning helps")

        for label, check in (("postprocessing", plain), ("main system", main_system), ("conditioning", conditioning)):
            _guarded(result, f"instance {i} {label}", check)
    return result


# ---- ORDER PATH ----

@_timed
def monotonicity(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["monotonicity"], points: int = 50,
                 progress: bool = True) -> SuiteResult:
    """Non-decreasing divergence along the order path, its KL value at λ = 1 and the tropical ceiling."""
    result = SuiteResult("monotonicity")
    grid_tol, kl_tol, tol = cfg.tolerance("monotone_grid"), cfg.tolerance("kl_extrapolation"), cfg.tolerance("inequality")
    h = 1e-5
    for i, rng in _instances(result.name, seed, count, progress):
        n = int(rng.integers(2, 5))
        pmfs = [random_pmf(rng, n) for _ in range(3)]
        gammas = list(rng.dirichlet(np.ones(2)))

        def check() -> None:
            rows = sweep_path(pmfs, gammas, lambda_grid(gammas, None, 10.0, points))
            for prev, row in zip(rows, rows[1:]):
                result.at_least(row.divergence, prev.divergence, grid_tol, f"instance {i} λ={row.lam:.4g}")
            for row in rows:
                result.at_least(row.tropical_limit, row.divergence, tol, f"instance {i} tropical ceiling λ={row.lam:.4g}")
            below = renyi_multivariate(path_orders(PathSpec(tuple(gammas), 1.0 - h)), pmfs)
            above = renyi_multivariate(path_orders(PathSpec(tuple(gammas), 1.0 + h)), pmfs)
            result.identity(0.5 * (below + above), rows[0].kl_limit, kl_tol, f"instance {i} KL at λ = 1")

        _guarded(result, f"instance {i}", check)
    return result


# ---- SAMPLING ----

@_timed
def monte_carlo(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["monte_carlo"],
                progress: bool = True) -> SuiteResult:
    """Analytic ICE inside a few batch-means standard errors of the sampled certainty equivalent."""
    result = SuiteResult("monte_carlo")
    multiple = cfg.tolerance("mc_stderr_multiple")
    for i, rng in _instances(result.name, seed, count, progress):
        n, d = int(rng.integers(2, 5)), int(rng.integers(1, 4))
        odds, risk = random_odds(rng, n, d), random_risk(rng, d)
        # odd instances carry side information
        if i % 2 == 0:
            game, bets = random_pmf(rng, n), _random_bets(rng, n, d)
            ice = multi_ice_unconditional
        else:
            n_g = int(rng.integers(2, 4))
            game, bets = random_joint(rng, n, n_g), _random_bets(rng, n, d, n_g)
            ice = multi_ice_conditional

        def check() -> None:
            analytic = ice(game, odds, bets, risk)
            estimate = monte_carlo_ice(game, odds, bets, risk, cfg, rng)
            allowed = multiple * estimate.stderr + 1e-12 * abs(analytic)
            result.record(allowed - abs(estimate.estimate - analytic), f"instance {i}")

        _guarded(result, f"instance {i}", check)
    return result


# ---- GPT RESOURCE THEORY ----

def _model(i: int) -> GptModel:
    return build_classical(3) if i % 2 == 0 else build_quantum(2)


@_timed
def resource_axioms(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["resource_axioms"],
                    progress: bool = True) -> SuiteResult:
    """Nonnegativity, vanishing on trivial measurements, postprocessing monotonicity, advantage = exp(monotone)."""
    result = SuiteResult("resource_axioms")
    tol = cfg.tolerance("inequality")
    for i, rng in _instances(result.name, seed, count, progress):
        model = _model(i)
        size, k, d = int(rng.integers(2, 4)), int(rng.integers(2, 4)), int(rng.integers(1, 3))
        ensemble = random_ensemble(model, rng, size)
        measurement = random_measurement(model, rng, k)
        orders = random_orders(rng, d, pivot_zero=True)
        odds = random_odds(rng, size, d)
        refs = list(odds.induced_pmfs)

        def check() -> None:
            value = informativeness_monotone(measurement, ensemble, refs, orders)
            result.at_least(value, 0.0, tol, f"instance {i} nonnegative")
            trivial = uninformative(random_pmf(rng, k), model)
            result.identity(informativeness_monotone(trivial, ensemble, refs, orders), 0.0, tol,
                            f"instance {i} trivial measurement")
            coarse = postprocess_measurement(measurement, random_kernel(rng, k, int(rng.integers(1, 4))))
            result.at_least(value, informativeness_monotone(coarse, ensemble, refs, orders), tol,
                            f"instance {i} postprocessing")
            ratio = advantage_ratio(measurement, ensemble, odds, orders_to_risk(orders))
            result.identity(float(np.log(ratio)), value, cfg.tolerance("identity"), f"instance {i} advantage")

        _guarded(result, f"instance {i}", check)
    return result


@_timed
def sd_reduction(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["sd_reduction"],
                 progress: bool = True) -> SuiteResult:
    """Risk-neutral betting at constant odds C is C times the state-discrimination success."""
    result = SuiteResult("sd_reduction")
    tol = cfg.tolerance("identity")

    _, ensemble, measurement = qubit_fixture()
    result.identity(2.0 * sd_success(measurement, ensemble), 1.5, tol, "qubit fixture")
    result.identity(sb_risk_neutral_value(measurement, ensemble, [2.0, 2.0]), 1.5, tol, "qubit fixture value")

    for i, rng in _instances(result.name, seed, count, progress):
        model = _model(i)
        size, k = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        ensemble = random_ensemble(model, rng, size)
        measurement = random_measurement(model, rng, k)
        c = float(rng.uniform(1.0, 3.0))

        def check() -> None:
            success = sd_success(measurement, ensemble)
            value = sb_risk_neutral_value(measurement, ensemble, [c] * size)
            result.identity(c * success, value, tol, f"instance {i} reduction")
            brute = exhaustive_risk_neutral_sb(measurement, ensemble, [c] * size)
            result.identity(brute.value, value, tol, f"instance {i} exhaustive")
            joint = outcome_joint(measurement, ensemble).mass
            guessed = sum(joint[x, a] for a, x in enumerate(map_postprocessing(measurement, ensemble)))
            result.identity(float(guessed), success, tol, f"instance {i} MAP guess")

        _guarded(result, f"instance {i}", check)
    return result


# ---- SIDE INFORMATION ----

def correlated_joint(n: int = 2, eps: float = 1e-6) -> JointPmf:
    """Perfectly correlated X = G, smoothed toward the uniform joint by ε."""
    return JointPmf((1.0 - eps) * np.eye(n) / n + eps / n ** 2)


def correlated_gain(eps: float = 1e-6) -> float:
    """
    Gain of ``correlated_joint(2, eps)`` at even odds and R = 2. Without the side information
    the game is fair and worth nothing; with it the orders are (½, ½) and β = ½, so the
    gain is −log(½(√(1 − ε/2) + √(ε/2))²).
    """
    return -math.log(0.5 * (math.sqrt(1.0 - eps / 2) + math.sqrt(eps / 2)) ** 2)


@_timed
def side_info(seed: int, cfg: OracleConfig, count: int = DEFAULT_COUNTS["side_info"],
              progress: bool = True) -> SuiteResult:
    """Side information never lowers the optimal log ICE, and helps strictly when it is informative."""
    result = SuiteResult("side_info")
    tol = cfg.tolerance("inequality")

    def fixture() -> None:
        gain = side_info_gain(correlated_joint(), OddsProfile(np.array([[2.0, 2.0]])), RiskVector((2.0,)))
        result.at_least(gain, 1e-3, 0.0, "correlated fixture")
        result.identity(gain, correlated_gain(), tol, "correlated fixture closed form")

    _guarded(result, "correlated fixture", fixture)
    for i, rng in _instances(result.name, seed, count, progress):
        nx, ng, d = int(rng.integers(2, 5)), int(rng.integers(2, 4)), int(rng.integers(1, 4))
        joint, odds, risk = random_joint(rng, nx, ng), random_odds(rng, nx, d), random_risk(rng, d)

        def check() -> None:
            result.at_least(side_info_gain(joint, odds, risk), 0.0, tol, f"instance {i}")

        _guarded(result, f"instance {i}", check)
    return result


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "decomposition": decomposition,
    "optimality": optimality,
    "fixtures": fixtures,
    "dpi": dpi,
    "monotonicity": monotonicity,
    "monte_carlo": monte_carlo,
    "resource_axioms": resource_axioms,
    "sd_reduction": sd_reduction,
    "side_info": side_info,
}


def run_suites(seed: int, cfg: OracleConfig, names: Optional[List[str]] = None,
               counts: Optional[Dict[str, int]] = None, progress: bool = True) -> List[SuiteResult]:
    """Run the named suites in a fixed order; each suite derives its instances from ``seed``."""
    counts = {**DEFAULT_COUNTS, **(counts or {})}
    results = []
    for name in names or list(SUITES):
        if name not in SUITES:
            raise ValidationError(f"Unknown suite {name!r}; choose from {sorted(SUITES)}.")
        results.append(SUITES[name](seed, cfg, count=counts[name], progress=progress))
    return results


def render_summary(results: List[SuiteResult]) -> None:
    table = Table(title="verify-all")
    table.add_column("suite")
    table.add_column("checks", justify="right")
    table.add_column("violations", justify="right")
    table.add_column("worst slack", justify="right")
    table.add_column("seconds", justify="right")
    table.add_column("")
    for r in results:
        table.add_row(r.name, str(r.checks), str(r.violations), f"{r.worst_slack:.3g}", f"{r.seconds:.2f}",
                      "✅" if r.passed else "❌")
    console.print(table)
    for r in results:
        for failure in r.failures:
            console.print(f"[red]❌ {r.name}[/red] {failure}")
