# lib/betting.py
"""Isoelastic multi-lottery betting: certainty equivalents, decompositions, optimal bets.

A gambler with unit initial wealth splits it over the outcomes of one random event in
each of d simultaneous lotteries. Lottery k pays b_k(x)·o_k(x) when x occurs, and the
gambler values the wealth vector with the multi-commodity isoelastic utility
Π_k w_k^{1−R_k}/(1−R_k). The certainty equivalent (ICE) is the sure wealth, equal in
every lottery, with the same expected utility.
"""
import enum
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from lib.divergences import (
    OrderVector,
    TOL_INEQ,
    renyi_bivariate,
    renyi_conditional,
    renyi_multivariate,
    validate_orders,
)
from lib.errors import (
    CascadeSingularityError,
    DimensionMismatchError,
    ExcludedLimitError,
    PropertyViolationError,
    ValidationError,
)
from lib.log import get_logger
from lib.prob_core import (
    CondPmf,
    JointPmf,
    Labels,
    Pmf,
    marginals_and_conditionals,
)

log = get_logger(__name__)

TOL_EXCLUDED = 1e-12
TOL_FAIRNESS = 1e-12


# ---- RISK ----

class RiskCase(str, enum.Enum):
    CASE_I = "I"  # every R_k ≥ 1
    CASE_II = "II"  # every 0 < R_k < 1 and Σ R_k > d − 1


@dataclass(frozen=True)
class RiskVector:
    """
    Risk-aversion parameters (R_1, ..., R_d).
    Any nonnegative vector with Σ(1 − R_k) ≠ 0 has a certainty equivalent; only the
    admissible ones (``case`` not None) map onto Rényi orders.
    """

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(r) for r in np.atleast_1d(np.asarray(self.values, dtype=float)))
        if not values:
            raise ValidationError("Risk vector is empty.")
        if not all(np.isfinite(values)) or any(r < 0 for r in values):
            raise ValidationError(f"Risk-aversion values must be finite and nonnegative, got {list(values)}.")
        object.__setattr__(self, "values", values)
        if abs(self.exponent_sum) <= TOL_EXCLUDED:
            raise ExcludedLimitError(
                f"Risk vector {list(values)} has Σ(1 − R_k) = 0 (the logarithmic limit); "
                f"its certainty equivalent has no closed multi-lottery form. Perturb R slightly instead."
            )

    @property
    def d(self) -> int:
        return len(self.values)

    @property
    def exponent_sum(self) -> float:
        return float(sum(1.0 - r for r in self.values))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def case(self) -> Optional[RiskCase]:
        if all(r >= 1 for r in self.values):
            return RiskCase.CASE_I
        if all(0 < r < 1 for r in self.values) and sum(self.values) > self.d - 1:
            return RiskCase.CASE_II
        return None

    def require_admissible(self) -> RiskCase:
        case = self.case
        if case is None:
            raise ValidationError(
                f"Risk vector {list(self.values)} is not admissible: need every R_k ≥ 1, "
                f"or every 0 < R_k < 1 with Σ R_k > d − 1 = {self.d - 1}."
            )
        return case


def risk_to_orders(risk: RiskVector) -> OrderVector:
    risk.require_admissible()
    r = risk.as_array()
    alpha0 = 1.0 / (1.0 + float(np.sum(r - 1.0)))
    return validate_orders([alpha0, *((r - 1.0) * alpha0)])


def orders_to_risk(orders: Union[OrderVector, Sequence[float]]) -> RiskVector:
    orders = orders if isinstance(orders, OrderVector) else validate_orders(orders)
    alpha0 = orders.alphas[0]
    if alpha0 == 0:
        raise ValidationError("α_0 = 0 has no risk-aversion counterpart.")
    return RiskVector(tuple(1.0 + a / alpha0 for a in orders.alphas[1:]))


def isoelastic_utility(r: float, w: float) -> float:
    if w <= 0:
        raise ValidationError(f"Wealth must be positive, got {w!r}.")
    if r < 0:
        raise ValidationError(f"Risk aversion must be nonnegative, got {r!r}.")
    if r == 1.0:
        return float(np.log(w))
    return float(w ** (1.0 - r) / (1.0 - r))


def multi_commodity_utility(risk: RiskVector, wealth: Sequence[float]) -> float:
    """Π_k w_k^{1−R_k}/(1−R_k); the logarithmic coordinates R_k = 1 have no product form."""
    w = np.asarray(wealth, dtype=float)
    r = risk.as_array()
    if w.shape != r.shape:
        raise DimensionMismatchError(f"Expected {risk.d} wealth coordinates, got {w.size}.")
    if np.any(w <= 0):
        raise ValidationError("Wealth coordinates must be positive.")
    if np.any(r == 1.0):
        raise ValidationError("Multi-commodity utility needs every R_k ≠ 1.")
    return float(np.prod(w ** (1.0 - r) / (1.0 - r)))


def invert_multi_commodity_utility(risk: RiskVector, value: float) -> float:
    """The w with multi_commodity_utility(risk, (w, ..., w)) = value."""
    r = risk.as_array()
    if np.any(r == 1.0):
        raise ValidationError("Multi-commodity utility needs every R_k ≠ 1.")
    scaled = value * float(np.prod(1.0 - r))
    if scaled <= 0:
        raise ValidationError(f"Utility {value!r} is outside the range of the utility on the diagonal.")
    return float(scaled ** (1.0 / risk.exponent_sum))


# ---- ODDS AND BETS ----

@dataclass(frozen=True, eq=False)
class OddsProfile:
    """Per-lottery wealth multipliers o_k(x), stored as a (d, |X|) array."""

    odds: np.ndarray
    outcomes: Optional[Labels] = None

    def __post_init__(self) -> None:
        odds = np.array(self.odds, dtype=float)
        if odds.ndim == 1:
            odds = odds[None, :]
        if odds.ndim != 2 or odds.size == 0:
            raise ValidationError(f"Odds must be a (d, |X|) array, got shape {odds.shape}.")
        if not np.all(np.isfinite(odds)) or np.any(odds <= 0):
            raise ValidationError("Odds must be strictly positive and finite.")
        odds.setflags(write=False)
        object.__setattr__(self, "odds", odds)
        labels = self.outcomes if self.outcomes is not None else [str(i) for i in range(odds.shape[1])]
        if len(labels) != odds.shape[1]:
            raise DimensionMismatchError("Odds and outcome labels differ in length.")
        object.__setattr__(self, "outcomes", tuple(str(x) for x in labels))

    @classmethod
    def from_pmfs(cls, pmfs: Sequence[Pmf], fairness: Union[float, Sequence[float]] = 1.0) -> "OddsProfile":
        """Odds o_k = 1/(F_k p_k), whose induced PMF is p_k and fairness constant F_k."""
        f = np.broadcast_to(np.asarray(fairness, dtype=float), (len(pmfs),))
        for p in pmfs:
            p.require_full_support("Odds-inducing PMF")
        return cls(np.stack([1.0 / (fk * p.mass) for fk, p in zip(f, pmfs)]), pmfs[0].outcomes)

    @property
    def d(self) -> int:
        return self.odds.shape[0]

    @property
    def fairness(self) -> np.ndarray:
        return (1.0 / self.odds).sum(axis=1)

    @property
    def induced_pmfs(self) -> Tuple[Pmf, ...]:
        return tuple(Pmf(1.0 / (f * o), self.outcomes) for f, o in zip(self.fairness, self.odds))

    def fairness_class(self, k: int) -> str:
        f = self.fairness[k]
        if abs(f - 1.0) <= TOL_FAIRNESS:
            return "fair"
        return "sub-fair" if f > 1.0 else "super-fair"

    def scaled(self, factors: Sequence[float]) -> "OddsProfile":
        return OddsProfile(self.odds * np.asarray(factors, dtype=float)[:, None], self.outcomes)

    def to_json(self) -> dict:
        return {"outcomes": list(self.outcomes), "odds": self.odds.tolist(),
                "fairness": self.fairness.tolist(),
                "classes": [self.fairness_class(k) for k in range(self.d)]}


@dataclass(frozen=True, eq=False)
class BettingProfile:
    """d bets, either all Pmf (unconditional) or all CondPmf (side information)."""

    bets: Tuple[Union[Pmf, CondPmf], ...]

    def __post_init__(self) -> None:
        bets = tuple(self.bets)
        if not bets:
            raise ValidationError("A betting profile needs at least one bet.")
        kinds = {type(b) for b in bets}
        if len(kinds) != 1 or kinds.pop() not in (Pmf, CondPmf):
            raise ValidationError("Bets must be all unconditional or all conditional PMFs.")
        if any(b.outcomes != bets[0].outcomes for b in bets):
            raise DimensionMismatchError("Bets must share one outcome set.")
        if isinstance(bets[0], CondPmf) and any(b.given != bets[0].given for b in bets):
            raise DimensionMismatchError("Conditional bets must share one conditioning set.")
        object.__setattr__(self, "bets", bets)

    @property
    def conditional(self) -> bool:
        return isinstance(self.bets[0], CondPmf)

    @property
    def d(self) -> int:
        return len(self.bets)

    def stacked(self) -> np.ndarray:
        return np.stack([b.mass for b in self.bets])

    def to_json(self) -> dict:
        return {"conditional": self.conditional, "bets": [b.to_json() for b in self.bets]}


def _check_game(outcomes: Labels, odds: OddsProfile, risk: RiskVector, bets: Optional[BettingProfile] = None) -> None:
    if odds.outcomes != outcomes:
        raise DimensionMismatchError(f"Odds outcomes {list(odds.outcomes)} differ from {list(outcomes)}.")
    if odds.d != risk.d:
        raise DimensionMismatchError(f"{odds.d} odds vectors but {risk.d} risk-aversion values.")
    if bets is not None:
        if bets.d != risk.d:
            raise DimensionMismatchError(f"{bets.d} bets but {risk.d} lotteries.")
        if bets.bets[0].outcomes != outcomes:
            raise DimensionMismatchError("Bets are placed on a different outcome set.")


# ---- CERTAINTY EQUIVALENTS ----

def _log_ice(weights: np.ndarray, log_wealth: np.ndarray, risk: RiskVector) -> float:
    """(1/Σ(1−R)) log Σ weight · Π_k W_k^{1−R_k}; log_wealth has the lottery axis first."""
    expo = 1.0 - risk.as_array()
    log_u = np.tensordot(expo, log_wealth, axes=1)
    return float(logsumexp(log_u, b=weights) / risk.exponent_sum)


def log_multi_ice_unconditional(p0: Pmf, odds: OddsProfile, bets: BettingProfile, risk: RiskVector) -> float:
    _check_game(p0.outcomes, odds, risk, bets)
    if bets.conditional:
        raise ValidationError("Unconditional ICE needs unconditional bets.")
    support = p0.mass > 0
    b = bets.stacked()[:, support]
    if np.any(b <= 0):
        raise ValidationError("Bets must be positive on every outcome of positive probability.")
    return _log_ice(p0.mass[support], np.log(b * odds.odds[:, support]), risk)


def multi_ice_unconditional(p0: Pmf, odds: OddsProfile, bets: BettingProfile, risk: RiskVector) -> float:
    return float(np.exp(log_multi_ice_unconditional(p0, odds, bets, risk)))


def log_multi_ice_conditional(p0_joint: JointPmf, odds: OddsProfile, bets: BettingProfile, risk: RiskVector) -> float:
    _check_game(p0_joint.outcomes, odds, risk, bets)
    if not bets.conditional:
        raise ValidationError("ICE with side information needs conditional bets.")
    if bets.bets[0].given != p0_joint.given:
        raise DimensionMismatchError("Conditional bets and the joint PMF use different side-information outcomes.")
    support = p0_joint.mass > 0  # (|X|, |G|)
    b = np.swapaxes(bets.stacked(), 1, 2)[:, support]  # (d, |X|, |G|) → (d, n_support)
    if np.any(b <= 0):
        raise ValidationError("Bets must be positive on every (x, g) of positive probability.")
    o = np.broadcast_to(odds.odds[:, :, None], (risk.d,) + p0_joint.mass.shape)[:, support]
    return _log_ice(p0_joint.mass[support], np.log(b * o), risk)


def multi_ice_conditional(p0_joint: JointPmf, odds: OddsProfile, bets: BettingProfile, risk: RiskVector) -> float:
    return float(np.exp(log_multi_ice_conditional(p0_joint, odds, bets, risk)))


def single_lottery_ice(p: Pmf, bet: Pmf, odds: Sequence[float], r: float) -> float:
    """One-lottery ICE; R = 1 is the geometric mean of wealth."""
    o = OddsProfile(np.asarray(odds, dtype=float), p.outcomes)
    if r == 1.0:
        support = p.mass > 0
        if np.any(bet.mass[support] <= 0):
            raise ValidationError("Bets must be positive on every outcome of positive probability.")
        return float(np.exp(np.dot(p.mass[support], np.log(bet.mass[support] * o.odds[0, support]))))
    return multi_ice_unconditional(p, o, BettingProfile((bet,)), RiskVector((r,)))


def kelly_bet(p: Pmf, odds: Sequence[float]) -> Tuple[Pmf, float]:
    """Logarithmic-utility optimum of one lottery: bet proportionally, log ICE = D_KL(p‖p_o) − log F."""
    o = OddsProfile(np.asarray(odds, dtype=float), p.outcomes)
    induced = o.induced_pmfs[0]
    return p, renyi_bivariate(1.0, p, induced) - float(np.log(o.fairness[0]))


def expected_multi_commodity_utility(p0: Pmf, odds: OddsProfile, bets: BettingProfile, risk: RiskVector) -> float:
    """E_p[u_R(W)] computed outcome by outcome, the definitional side of the ICE."""
    _check_game(p0.outcomes, odds, risk, bets)
    wealth = bets.stacked() * odds.odds
    return float(sum(px * multi_commodity_utility(risk, wealth[:, x])
                     for x, px in enumerate(p0.mass) if px > 0))


# ---- CASCADE ----

class _Cascade:
    """
    Peels the bets off one lottery at a time, last lottery first.

    Arrays are indexed (g, x); an unconditional game is the single-row case. For
    level k the cascade weight is
        Z_k(x|g) = p(x|g)^{α_0} Π_{l≤k} o_l(x)^{−α_l} Π_{m>k} (b_m(x|g) o_m(x))^{−α_m}
    normalized at exponent 1/A_k with A_k = α_0 + ... + α_k.
    """

    def __init__(self, orders: OrderVector, cond: np.ndarray, p_g: np.ndarray, odds: np.ndarray) -> None:
        self.alphas = orders.as_array()
        self.cum = np.cumsum(self.alphas)
        self.support = cond > 0
        with np.errstate(divide="ignore"):
            self.log_p = np.where(self.support, np.log(np.where(self.support, cond, 1.0)), 0.0)
        self.log_pg = np.log(p_g)
        self.log_odds = np.log(odds)
        self.d = odds.shape[0]

    def level(self, k: int, log_b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float, np.ndarray]:
        """log c_k(g), q_k(x|g), log E_k and q_G^{(k)}; only bets m > k are read."""
        a = self.alphas
        log_z = a[0] * self.log_p - (a[1:k + 1, None] * self.log_odds[:k]).sum(axis=0)[None, :]
        if k < self.d:
            tail = np.where(self.support[None], log_b[k:], 0.0) + self.log_odds[k:, None, :]
            log_z = log_z - (a[k + 1:, None, None] * tail).sum(axis=0)
        scaled = np.where(self.support, log_z / self.cum[k], -np.inf)
        log_c = logsumexp(scaled, axis=1)
        q = np.exp(scaled - log_c[:, None])
        weights = self.log_pg + (self.cum[k] / a[0]) * log_c
        log_e = float(logsumexp(weights))
        return log_c, q, log_e, np.exp(weights - log_e)

    def optimal(self) -> np.ndarray:
        """Backward recursion b_d = q_d, then b_k = q_k for k = d−1, ..., 1."""
        bets = np.zeros((self.d,) + self.support.shape)
        log_b = np.zeros_like(bets)
        for k in range(self.d, 0, -1):
            _, q, _, _ = self.level(k, log_b)
            bets[k - 1] = q
            with np.errstate(divide="ignore"):
                log_b[k - 1] = np.where(self.support, np.log(np.where(self.support, q, 1.0)), 0.0)
        return bets


class PenaltyTerm(NamedTuple):
    order: float  # S_k = A_k / A_{k−1}
    coefficient: float  # α_k / (α_0 − 1) ≤ 0
    penalty: float  # D_{S_k}(q_k ‖ b_k) ≥ 0

    @property
    def contribution(self) -> float:
        # a vanishing coefficient contributes nothing even when the penalty is infinite
        return 0.0 if self.coefficient == 0 else self.coefficient * self.penalty


@dataclass(frozen=True, eq=False)
class DecompositionReport:
    conditional: bool
    orders: OrderVector
    log_ice: float
    divergence_term: float
    divergence_default_pivot: float
    penalty_terms: Tuple[PenaltyTerm, ...]
    fairness_terms: Tuple[float, ...]
    cascade_log_constants: Tuple[np.ndarray, ...]
    cascade_targets: Tuple[Union[Pmf, CondPmf], ...]
    optimal_bets: BettingProfile
    optimal_log_ice: float
    notes: List[str] = field(default_factory=list)

    @property
    def recomposed(self) -> float:
        return self.divergence_term + sum(t.contribution for t in self.penalty_terms) + sum(self.fairness_terms)

    @property
    def slack(self) -> float:
        """recomposed − log_ice: zero without side information, nonnegative with it."""
        return self.recomposed - self.log_ice

    def to_json(self) -> dict:
        return {
            "conditional": self.conditional,
            "orders": self.orders.to_json(),
            "log_ice": self.log_ice,
            "ice": float(np.exp(self.log_ice)),
            "divergence_term": self.divergence_term,
            "divergence_default_pivot": self.divergence_default_pivot,
            "penalty_terms": [t._asdict() for t in self.penalty_terms],
            "fairness_terms": list(self.fairness_terms),
            "recomposed": self.recomposed,
            "slack": self.slack,
            "optimal_bets": self.optimal_bets.to_json(),
            "optimal_log_ice": self.optimal_log_ice,
            "notes": list(self.notes),
        }


def _fairness_terms(orders: OrderVector, odds: OddsProfile) -> Tuple[float, ...]:
    a = orders.as_array()
    return tuple(float(a[k + 1] / (a[0] - 1.0) * np.log(f)) for k, f in enumerate(odds.fairness))


def _decompose(conditional: bool, orders: OrderVector, cascade: _Cascade, bets: np.ndarray, log_ice: float,
               divergence_term: float, divergence_default: float,
               odds: OddsProfile, wrap) -> DecompositionReport:
    # only cells of positive probability enter the cascade; bets elsewhere are free
    support = cascade.support[None]
    if np.any((bets <= 0) & support):
        raise CascadeSingularityError(
            "A bet has zero mass on an outcome of positive probability; the cascade divides by it."
        )
    with np.errstate(divide="ignore"):
        log_b = np.where(support, np.log(np.where(support, bets, 1.0)), 0.0)
    a = orders.as_array()
    penalties, constants, targets = [], [], []
    for k in range(1, cascade.d + 1):
        log_c, q, _, q_g = cascade.level(k, log_b)
        order = float(cascade.cum[k] / cascade.cum[k - 1])
        q_xg = (q_g[:, None] * q).ravel()
        r_xg = (q_g[:, None] * bets[k - 1]).ravel()
        # cells empty under both sides carry no mass and would read as 0^{1−S} = ∞ for S > 1
        cells = cascade.support.ravel() | (r_xg > 0)
        penalty = renyi_bivariate(order, Pmf(q_xg[cells]), Pmf(r_xg[cells]))
        penalties.append(PenaltyTerm(order, float(a[k] / (a[0] - 1.0)), float(penalty)))
        constants.append(log_c)
        targets.append(wrap(q))
        log.debug("cascade level %d: S=%s penalty=%s", k, order, penalty)

    optimal = cascade.optimal()
    fairness = _fairness_terms(orders, odds)
    notes = []
    if orders.pivot != 0:
        notes.append(
            f"α_0 is not the largest order (pivot {orders.pivot}); the divergence term uses the α_0 prefactor, "
            f"the default-pivot value is reported separately."
        )
    return DecompositionReport(
        conditional=conditional,
        orders=orders,
        log_ice=log_ice,
        divergence_term=divergence_term,
        divergence_default_pivot=divergence_default,
        penalty_terms=tuple(penalties),
        fairness_terms=fairness,
        cascade_log_constants=tuple(constants),
        cascade_targets=tuple(targets),
        optimal_bets=BettingProfile(tuple(wrap(b) for b in optimal)),
        optimal_log_ice=divergence_term + sum(fairness),
        notes=notes,
    )


# ---- UNCONDITIONAL GAME ----

def _unconditional_setup(p0: Pmf, odds: OddsProfile, risk: RiskVector) -> Tuple[OrderVector, _Cascade]:
    _check_game(p0.outcomes, odds, risk)
    orders = risk_to_orders(risk)
    return orders, _Cascade(orders, p0.mass[None, :], np.ones(1), odds.odds)


def unconditional_divergence_term(p0: Pmf, odds: OddsProfile, orders: OrderVector,
                                  pivot_override: Optional[int] = 0) -> float:
    return renyi_multivariate(orders, [p0, *odds.induced_pmfs], pivot_override=pivot_override)


def decompose_ice(p0: Pmf, odds: OddsProfile, bets: BettingProfile, risk: RiskVector) -> DecompositionReport:
    """
    Split log ICE into the divergence of (p0, p_1, ..., p_d) plus per-lottery penalties and
    fairness terms. The split is exact: ``report.slack`` vanishes up to rounding.
    """
    orders, cascade = _unconditional_setup(p0, odds, risk)
    _check_game(p0.outcomes, odds, risk, bets)
    if bets.conditional:
        raise ValidationError("Unconditional decomposition needs unconditional bets.")
    b = bets.stacked()[:, None, :]
    log_ice = log_multi_ice_unconditional(p0, odds, bets, risk)
    return _decompose(
        False, orders, cascade, b, log_ice,
        unconditional_divergence_term(p0, odds, orders),
        unconditional_divergence_term(p0, odds, orders, pivot_override=None),
        odds, lambda q: Pmf(q[0], p0.outcomes),
    )


def optimal_bets_unconditional(p0: Pmf, odds: OddsProfile, risk: RiskVector) -> Tuple[BettingProfile, float]:
    """
    Optimal bets and the optimal log ICE, D_ᾱ(p0, p_1, ..., p_d) + Σ_k α_k/(α_0−1) log F_k.
    Outcomes with p0(x) = 0 receive zero bet.
    """
    orders, cascade = _unconditional_setup(p0, odds, risk)
    bets = cascade.optimal()
    profile = BettingProfile(tuple(Pmf(b[0], p0.outcomes) for b in bets))
    value = unconditional_divergence_term(p0, odds, orders) + sum(_fairness_terms(orders, odds))
    return profile, value


# ---- GAME WITH SIDE INFORMATION ----

def _conditional_setup(p0_joint: JointPmf, odds: OddsProfile, risk: RiskVector):
    _check_game(p0_joint.outcomes, odds, risk)
    orders = risk_to_orders(risk)
    p_g, cond = marginals_and_conditionals(p0_joint).on_support()
    keep = np.array([g in p_g.outcomes for g in p0_joint.given])
    return orders, p_g, cond, keep, _Cascade(orders, cond.mass, p_g.mass, odds.odds)


def conditional_divergence_term(cond: CondPmf, p_g: Pmf, odds: OddsProfile, orders: OrderVector,
                                pivot_override: Optional[int] = 0) -> float:
    return renyi_conditional(orders, orders.alphas[0], [cond, *odds.induced_pmfs], p_g,
                             pivot_override=pivot_override)


def _expand_rows(rows: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Put bets back on the full conditioning set; unobservable g get the uniform bet."""
    full = np.full((keep.size, rows.shape[1]), 1.0 / rows.shape[1])
    full[keep] = rows
    return full


def decompose_ice_conditional(p0_joint: JointPmf, odds: OddsProfile, bets: BettingProfile,
                              risk: RiskVector) -> DecompositionReport:
    """
    Upper bound on log ICE with side information. ``report.slack`` ≥ 0, with equality for
    the bets of the backward recursion.
    """
    orders, p_g, cond, keep, cascade = _conditional_setup(p0_joint, odds, risk)
    _check_game(p0_joint.outcomes, odds, risk, bets)
    log_ice = log_multi_ice_conditional(p0_joint, odds, bets, risk)
    b = bets.stacked()[:, keep, :]
    report = _decompose(
        True, orders, cascade, b, log_ice,
        conditional_divergence_term(cond, p_g, odds, orders),
        conditional_divergence_term(cond, p_g, odds, orders, pivot_override=None),
        odds, lambda q: CondPmf(_expand_rows(q, keep), p0_joint.outcomes, p0_joint.given),
    )
    if report.slack < -TOL_INEQ:
        raise PropertyViolationError(
            f"Side-information bound violated: log ICE {report.log_ice!r} exceeds {report.recomposed!r}."
        )
    return report


def optimal_bets_conditional(p0_joint: JointPmf, odds: OddsProfile, risk: RiskVector) -> Tuple[BettingProfile, float]:
    orders, p_g, cond, keep, cascade = _conditional_setup(p0_joint, odds, risk)
    bets = cascade.optimal()
    profile = BettingProfile(tuple(CondPmf(_expand_rows(b, keep), p0_joint.outcomes, p0_joint.given) for b in bets))
    value = conditional_divergence_term(cond, p_g, odds, orders) + sum(_fairness_terms(orders, odds))
    return profile, value


def side_info_gain(p0_joint: JointPmf, odds: OddsProfile, risk: RiskVector) -> float:
    """Optimal log ICE with side information minus the optimum on the X-marginal."""
    _, with_info = optimal_bets_conditional(p0_joint, odds, risk)
    p_x = marginals_and_conditionals(p0_joint).p_x
    _, without = optimal_bets_unconditional(p_x, odds, risk)
    gain = with_info - without
    if gain < -TOL_INEQ:
        raise PropertyViolationError(f"Side information lowered the optimal log ICE by {-gain!r}.")
    return gain

