# cli/app.py
"""renyi-bet command line.

Every command reads JSON, writes one JSON report (or CSV) to stdout or ``--out`` and
exits with 0 on success, 2 on invalid input, 3 when a checked property fails and 4 on a
numeric singularity. Diagnostics go to stderr as ``{"error": ..., "message": ...}``.
"""
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Any, Dict, Iterator, List, Optional

import numpy as np
import typer

from cli import suites
from ingest.spec_loader import (
    BettingGame,
    GptSetup,
    betting_game,
    divergence_file,
    gpt_setup,
    load_spec,
)
from lib.betting import (
    decompose_ice,
    decompose_ice_conditional,
    log_multi_ice_conditional,
    log_multi_ice_unconditional,
    optimal_bets_conditional,
    optimal_bets_unconditional,
    risk_to_orders,
    side_info_gain,
)
from lib.config import get_oracle_config, load_oracle_config, resolve_seed
from lib.divergences import (
    conditioning_dpi_check,
    dpi_check,
    lambda_grid,
    main_system_dpi_check,
    renyi_conditional,
    renyi_multivariate,
    sweep_path,
    validate_orders,
)
from lib.errors import PropertyViolationError, RenyiBetError, ValidationError, exit_code_for
from lib.gpt_betting import (
    advantage_ratio,
    informativeness_monotone,
    map_postprocessing,
    postprocess_measurement,
    sb_optimal_log_ice,
    sb_risk_neutral_value,
    sd_success,
)
from lib.log import get_logger, set_level
from lib.prob_core import CondPmf, marginals_and_conditionals
from oracles.brute_force import brute_force_optimal_bets
from oracles.monte_carlo import monte_carlo_ice
from oracles.postprocessing import MAX_MAPS, exhaustive_postprocessing
from outputs.report_writer import ReportWriter
from utils.validation import parse_float_list

log = get_logger(__name__)

app = typer.Typer(
    name="renyi-bet",
    add_completion=False,
    no_args_is_help=True,
    help="Multivariate Rényi divergences, isoelastic betting games and their oracles.",
)

# ---- SHARED OPTIONS ----

Out = Annotated[Optional[Path], typer.Option("--out", help="Write the report here instead of stdout.")]
Bits = Annotated[bool, typer.Option("--bits", help="Report log-quantities in bits instead of nats.")]
Format = Annotated[str, typer.Option("--format", help="json or csv.")]
Seed = Annotated[Optional[int], typer.Option("--seed", help="Seed; falls back to RENYI_BET_SEED, then the config file.")]
Tolerance = Annotated[Optional[float], typer.Option("--tolerance", help="Tolerance for the checked inequalities.")]
SpecFile = Annotated[Path, typer.Option("--spec", help="JSON game spec.")]


@app.callback()
def main(
    log_level: Annotated[Optional[str], typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR.")] = None,
) -> None:
    if log_level:
        set_level(log_level)


def _diagnose(command: str, err: RenyiBetError) -> None:
    typer.echo(json.dumps({"error": err.kind, "command": command, "message": str(err)}, ensure_ascii=False), err=True)


@contextmanager
def _handled(command: str) -> Iterator[None]:
    """Map library errors to their exit codes with a JSON diagnostic on stderr."""
    try:
        yield
    except RenyiBetError as err:
        log.debug("%s failed", command, exc_info=True)
        _diagnose(command, err)
        raise typer.Exit(exit_code_for(err))


def _fail_property(command: str, message: str) -> None:
    err = PropertyViolationError(message)
    _diagnose(command, err)
    raise typer.Exit(exit_code_for(err))


def _alphas(text: Optional[str], fallback: Optional[List[float]]) -> List[float]:
    if text is not None:
        return parse_float_list(text, "order list")
    if fallback is None:
        raise ValidationError("No orders given; pass --alphas or put 'alphas' in the spec.")
    return fallback


def _holds(before: float, after: float, tol: float) -> bool:
    return before == math.inf or before >= after - tol


# ---- DIVERGENCES ----

@app.command()
def div(
    pmfs: Annotated[Path, typer.Option("--pmfs", help="JSON list of d+1 PMFs, or a divergence spec.")],
    alphas: Annotated[Optional[str], typer.Option("--alphas", help="Comma-separated orders summing to 1.")] = None,
    pivot: Annotated[Optional[int], typer.Option("--pivot", help="Use α_pivot in the prefactor.")] = None,
    out: Out = None, bits: Bits = False, fmt: Format = "json",
) -> None:
    """Multivariate Rényi divergence D_ᾱ(p_0, ..., p_d)."""
    with _handled("div"):
        inputs = divergence_file(pmfs)
        orders = validate_orders(_alphas(alphas, inputs.alphas))
        pivot = pivot if pivot is not None else inputs.pivot
        value = renyi_multivariate(orders, inputs.pmfs, pivot_override=pivot)
        report = {"divergence": value, "case": orders.case.value, "pivot": orders.pivot if pivot is None else pivot}
        ReportWriter(out, fmt, bits).write("div", report)


@app.command("cond-div")
def cond_div(
    spec: SpecFile,
    alphas: Annotated[Optional[str], typer.Option("--alphas")] = None,
    beta: Annotated[Optional[float], typer.Option("--beta", help="Outer power-mean parameter β > 0.")] = None,
    out: Out = None, bits: Bits = False, fmt: Format = "json",
) -> None:
    """Conditional multivariate Rényi divergence from a spec with cond_pmfs and p_G."""
    with _handled("cond-div"):
        inputs = divergence_file(spec)
        orders = validate_orders(_alphas(alphas, inputs.alphas))
        beta = beta if beta is not None else inputs.beta
        if beta is None or inputs.p_g is None or not inputs.cond_pmfs:
            raise ValidationError("cond-div needs 'cond_pmfs', 'p_G' and a β (spec field or --beta).")
        value = renyi_conditional(orders, beta, inputs.cond_pmfs, inputs.p_g, pivot_override=inputs.pivot)
        report = {"divergence": value, "case": orders.case.value,
                  "pivot": orders.pivot if inputs.pivot is None else inputs.pivot, "beta": float(beta)}
        ReportWriter(out, fmt, bits).write("cond-div", report)


@app.command("dpi-check")
def dpi_check_cmd(
    spec: SpecFile,
    kind: Annotated[str, typer.Option("--kind", help="plain, main-system or conditioning.")] = "plain",
    alphas: Annotated[Optional[str], typer.Option("--alphas")] = None,
    tolerance: Tolerance = None,
    out: Out = None, bits: Bits = False, fmt: Format = "json",
) -> None:
    """
    Data processing checks.
    plain: one kernel applied to every PMF. main-system: kernel g (or one shared kernel)
    applied to every conditional p_k(·|g). conditioning: the kernel postprocesses G.
    """
    with _handled("dpi-check"):
        inputs = divergence_file(spec)
        orders = validate_orders(_alphas(alphas, inputs.alphas))
        tol = tolerance if tolerance is not None else get_oracle_config().tolerance("inequality")
        report: Dict[str, Any] = {"kind": kind}
        if kind == "plain":
            if inputs.kernel is None:
                raise ValidationError("plain DPI check needs a 'kernel'.")
            r = dpi_check(orders, inputs.pmfs, inputs.kernel)
            report.update(before=r.before, after=r.after, holds=_holds(r.before, r.after, tol))
        elif kind == "main-system":
            if inputs.p_g is None or inputs.beta is None:
                raise ValidationError("main-system DPI check needs 'p_G' and 'beta'.")
            kernels = inputs.kernels or ([inputs.kernel] * len(inputs.p_g) if inputs.kernel is not None else [])
            r = main_system_dpi_check(orders, inputs.beta, inputs.cond_pmfs, inputs.p_g, kernels)
            report.update(before=r.before, after=r.after, holds=_holds(r.before, r.after, tol))
        elif kind == "conditioning":
            if inputs.p_g is None or inputs.kernel is None or not inputs.cond_pmfs:
                raise ValidationError("conditioning DPI check needs 'cond_pmfs', 'p_G' and a 'kernel' on G.")
            p0_cond = inputs.cond_pmfs[0]
            if not isinstance(p0_cond, CondPmf):
                raise ValidationError("The first entry of 'cond_pmfs' must be a conditional PMF p_0(x|g).")
            r = conditioning_dpi_check(orders, p0_cond, inputs.pmfs or inputs.cond_pmfs[1:], inputs.p_g, inputs.kernel)
            report.update(before=r.before, after=r.after, unconditional=r.unconditional,
                          holds=_holds(r.before, r.after, tol),
                          unconditional_holds=_holds(r.before, r.unconditional, tol))
        else:
            raise ValidationError(f"Unknown DPI kind {kind!r}; use plain, main-system or conditioning.")
        ReportWriter(out, fmt, bits).write("dpi-check", report)
    if not report["holds"] or not report.get("unconditional_holds", True):
        _fail_property("dpi-check", f"Divergence grew under processing: {report['before']!r} < {report['after']!r}.")


@app.command()
def sweep(
    pmfs: Annotated[Path, typer.Option("--pmfs", help="JSON list of d+1 PMFs, or a divergence spec with gammas.")],
    gammas: Annotated[Optional[str], typer.Option("--gammas", help="Comma-separated weights summing to 1.")] = None,
    lambdas: Annotated[Optional[str], typer.Option("--lambdas", help="Explicit λ values.")] = None,
    lam_min: Annotated[Optional[float], typer.Option("--lam-min")] = None,
    lam_max: Annotated[float, typer.Option("--lam-max")] = 10.0,
    points: Annotated[int, typer.Option("--points")] = 50,
    out: Out = None, bits: Bits = False,
) -> None:
    """Divergence along the order path λ ↦ (λ, (1−λ)γ), as CSV."""
    with _handled("sweep"):
        inputs = divergence_file(pmfs)
        if gammas is not None:
            weights = parse_float_list(gammas, "weight list")
        elif inputs.gammas is not None:
            weights = inputs.gammas
        else:
            raise ValidationError("No weights given; pass --gammas or put 'gammas' in the spec.")
        grid = parse_float_list(lambdas, "λ list") if lambdas else lambda_grid(weights, lam_min, lam_max, points)
        rows = sweep_path(inputs.pmfs, weights, grid)
        ReportWriter(out, "csv", bits).write_table(
            ({"lambda": r.lam, "divergence": r.divergence, "kl_limit": r.kl_limit, "tropical_limit": r.tropical_limit}
             for r in rows),
            header=["lambda", "divergence", "kl_limit", "tropical_limit"],
        )


# ---- BETTING ----

def _game(spec: Path) -> BettingGame:
    return betting_game(load_spec(spec, ["betting", "conditional_betting"]))


def _log_ice(game: BettingGame) -> float:
    if game.bets is None:
        raise ValidationError("This command needs 'bets' in the spec.")
    if game.conditional:
        return log_multi_ice_conditional(game.p0, game.odds, game.bets, game.risk)
    return log_multi_ice_unconditional(game.p0, game.odds, game.bets, game.risk)


def _optimum(game: BettingGame):
    if game.conditional:
        return optimal_bets_conditional(game.p0, game.odds, game.risk)
    return optimal_bets_unconditional(game.p0, game.odds, game.risk)


@app.command()
def ice(spec: SpecFile, out: Out = None, bits: Bits = False, fmt: Format = "json") -> None:
    """Isoelastic certainty equivalent of the bets in the spec."""
    with _handled("ice"):
        game = _game(spec)
        value = _log_ice(game)
        report = {"ice": float(np.exp(value)), "log_ice": value, "conditional": game.conditional}
        ReportWriter(out, fmt, bits).write("ice", report)


@app.command()
def optimize(spec: SpecFile, out: Out = None, bits: Bits = False, fmt: Format = "json") -> None:
    """Closed-form optimal bets and the optimal log ICE."""
    with _handled("optimize"):
        game = _game(spec)
        bets, value = _optimum(game)
        report = {"bets": bets.to_json(), "max_log_ice": value, "max_ice": float(np.exp(value)),
                  "conditional": game.conditional}
        ReportWriter(out, fmt, bits).write("optimize", report)


@app.command()
def decompose(spec: SpecFile, out: Out = None, bits: Bits = False, fmt: Format = "json") -> None:
    """
    Split log ICE into the divergence term, per-lottery penalties and fairness terms.
    Without bets in the spec the optimal bets are decomposed. CSV lists one row per lottery.
    """
    with _handled("decompose"):
        game = _game(spec)
        bets = game.bets if game.bets is not None else _optimum(game)[0]
        if game.conditional:
            result = decompose_ice_conditional(game.p0, game.odds, bets, game.risk)
        else:
            result = decompose_ice(game.p0, game.odds, bets, game.risk)
        rows = [
            {"lottery": k + 1, "order": t.order, "coefficient": t.coefficient, "penalty": t.penalty,
             "contribution": t.contribution, "fairness_term": f}
            for k, (t, f) in enumerate(zip(result.penalty_terms, result.fairness_terms))
        ]
        ReportWriter(out, fmt, bits).write("decompose", result.to_json(), rows=rows)


@app.command("side-info")
def side_info(spec: SpecFile, out: Out = None, bits: Bits = False, fmt: Format = "json") -> None:
    """Gain in optimal log ICE from observing the side information."""
    with _handled("side-info"):
        game = betting_game(load_spec(spec, ["conditional_betting"]))
        _, with_info = optimal_bets_conditional(game.p0, game.odds, game.risk)
        _, without = optimal_bets_unconditional(marginals_and_conditionals(game.p0).p_x, game.odds, game.risk)
        report = {"gain": side_info_gain(game.p0, game.odds, game.risk),
                  "conditional_optimum": with_info, "unconditional_optimum": without}
        ReportWriter(out, fmt, bits).write("side-info", report)


# ---- STATE BETTING ----

def _gpt(spec: Path) -> GptSetup:
    setup = gpt_setup(load_spec(spec, ["gpt"]))
    setup.measurement.check_states(setup.ensemble)
    return setup


@app.command("gpt-bet")
def gpt_bet(spec: SpecFile, out: Out = None, bits: Bits = False, fmt: Format = "json") -> None:
    """Optimal state-betting value of a measurement and its advantage over measuring nothing."""
    with _handled("gpt-bet"):
        setup = _gpt(spec)
        if setup.odds is None or setup.risk is None:
            raise ValidationError("gpt-bet needs 'odds' and 'risk' in the spec.")
        value = sb_optimal_log_ice(setup.measurement, setup.ensemble, setup.odds, setup.risk)
        ratio = advantage_ratio(setup.measurement, setup.ensemble, setup.odds, setup.risk, setup.eta)
        report = {"optimal_log_ice": value, "advantage_ratio": ratio, "log_advantage": float(np.log(ratio))}
        if setup.odds.d == 1:
            report["risk_neutral_value"] = sb_risk_neutral_value(setup.measurement, setup.ensemble, setup.odds.odds[0])
        ReportWriter(out, fmt, bits).write("gpt-bet", report)


@app.command()
def sd(spec: SpecFile, out: Out = None, fmt: Format = "json") -> None:
    """State-discrimination success probability and the MAP guess per outcome."""
    with _handled("sd"):
        setup = _gpt(spec)
        report: Dict[str, Any] = {"sd_success": sd_success(setup.measurement, setup.ensemble),
                                  "map": list(map_postprocessing(setup.measurement, setup.ensemble))}
        if len(setup.ensemble.prior) ** len(setup.measurement.outcomes) <= MAX_MAPS:
            report["exhaustive_success"] = exhaustive_postprocessing(setup.measurement, setup.ensemble).value
        ReportWriter(out, fmt).write("sd", report)


@app.command()
def monotone(spec: SpecFile, tolerance: Tolerance = None, out: Out = None, bits: Bits = False,
             fmt: Format = "json") -> None:
    """
    Informativeness of the measurement. Orders and reference PMFs come from the spec, or
    from its risk vector and odds. With a 'kernel' the postprocessed measurement is scored too.
    """
    with _handled("monotone"):
        setup = _gpt(spec)
        orders, refs = setup.orders, setup.ref_pmfs
        if orders is None and setup.risk is not None:
            orders = risk_to_orders(setup.risk)
        if refs is None and setup.odds is not None:
            refs = list(setup.odds.induced_pmfs)
        if orders is None or refs is None:
            raise ValidationError("monotone needs 'orders' and 'ref_pmfs', or 'risk' and 'odds'.")
        value = informativeness_monotone(setup.measurement, setup.ensemble, refs, orders)
        report: Dict[str, Any] = {"monotone": value}
        if setup.kernel is not None:
            coarse = postprocess_measurement(setup.measurement, setup.kernel)
            report["postprocessed"] = informativeness_monotone(coarse, setup.ensemble, refs, orders)
        ReportWriter(out, fmt, bits).write("monotone", report)
    tol = tolerance if tolerance is not None else get_oracle_config().tolerance("inequality")
    if report.get("postprocessed", -math.inf) > report["monotone"] + tol:
        _fail_property("monotone", "Postprocessing increased the informativeness monotone.")


# ---- ORACLES ----

@app.command()
def oracle(
    spec: SpecFile,
    seed: Seed = None,
    mc_samples: Annotated[Optional[int], typer.Option("--mc-samples")] = None,
    grid_res: Annotated[Optional[float], typer.Option("--grid-res")] = None,
    config: Annotated[Optional[Path], typer.Option("--config", help="Oracle config JSON.")] = None,
    tolerance: Tolerance = None,
    out: Out = None, bits: Bits = False, fmt: Format = "json",
) -> None:
    """
    Compare the closed-form optimum against brute-force search, and the analytic ICE of the
    spec's bets (or of the optimal bets) against a Monte-Carlo estimate.
    """
    with _handled("oracle"):
        raw = load_spec(spec, ["betting", "conditional_betting"])
        game = betting_game(raw)
        overrides = dict(game.oracle)
        cfg = load_oracle_config(config, **overrides).with_overrides(
            seed=seed,
            mc_samples=mc_samples, grid_resolution=grid_res,
            tolerances={"optimality": tolerance} if tolerance is not None else None,
        )
        best, closed = _optimum(game)
        brute = brute_force_optimal_bets(game.p0, game.odds, game.risk, cfg)
        bets = game.bets if game.bets is not None else best
        log_ice = _log_ice(game._replace(bets=bets))
        estimate = monte_carlo_ice(game.p0, game.odds, bets, game.risk, cfg)
        report = {"closed_form": closed, "brute_force": brute.log_ice, "gap": closed - brute.log_ice,
                  "monte_carlo": estimate.estimate, "stderr": estimate.stderr,
                  "analytic_ice": float(np.exp(log_ice)), "evaluations": brute.evaluations}
        ReportWriter(out, fmt, bits).write("oracle", report)
    if report["gap"] < -cfg.tolerance("optimality"):
        _fail_property("oracle", f"Brute force beat the closed-form optimum by {-report['gap']!r}.")


@app.command("verify-all")
def verify_all(
    seed: Seed = None,
    suite: Annotated[Optional[List[str]], typer.Option("--suite", help="Run only these suites (repeatable).")] = None,
    instances: Annotated[Optional[int], typer.Option("--instances", help="Instances per suite.")] = None,
    config: Annotated[Optional[Path], typer.Option("--config", help="Oracle config JSON.")] = None,
    tolerance: Tolerance = None,
    out: Out = None,
) -> None:
    """Run the seeded property suites and exit 3 on any violation."""
    with _handled("verify-all"):
        cfg = load_oracle_config(config)
        cfg = cfg.with_overrides(
            seed=resolve_seed(seed, cfg),
            tolerances={"identity": tolerance, "inequality": tolerance} if tolerance is not None else None,
        )
        names = suite or list(suites.SUITES)
        counts = {name: instances for name in names} if instances is not None else None
        results = suites.run_suites(cfg.seed, cfg, names, counts, progress=sys.stderr.isatty())
        suites.render_summary(results)
        report = {"passed": all(r.passed for r in results), "suites": [r.to_json() for r in results],
                  "seed": cfg.seed}
        ReportWriter(out).write("verify-all", report)
    if not report["passed"]:
        failed = [r.name for r in results if not r.passed]
        _fail_property("verify-all", f"Suites with violations: {failed}.")
