# lib/divergences.py
"""Bivariate, multivariate and conditional multivariate Rényi divergences.

All values are in nats. Orders ᾱ = (α_0, ..., α_d) sum to one and are admissible
when either every order is nonnegative (case I) or exactly one order exceeds one and
all others are nonpositive (case II).
"""
import enum
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp, rel_entr, xlogy

from lib.errors import (
    DimensionMismatchError,
    SingularPivotError,
    ValidationError,
)
from lib.log import get_logger
from lib.prob_core import (
    CondPmf,
    Pmf,
    StochasticOp,
    apply_stochastic,
    bayes_pseudo_inverse,
)

log = get_logger(__name__)

TOL_ORDER_SUM = 1e-12
# absolute slack for inequality checks on log-scale quantities
TOL_INEQ = 1e-9


class OrderCase(str, enum.Enum):
    CASE_I = "I"
    CASE_II = "II"


@dataclass(frozen=True)
class OrderVector:
    alphas: Tuple[float, ...]
    case: OrderCase
    pivot: int

    @property
    def d_plus_one(self) -> int:
        return len(self.alphas)

    @property
    def alpha_star(self) -> float:
        return self.alphas[self.pivot]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alphas, dtype=float)

    def to_json(self) -> dict:
        return {"alphas": list(self.alphas), "case": self.case.value, "pivot": self.pivot}


def validate_orders(alphas: Iterable[float]) -> OrderVector:
    values = tuple(float(a) for a in alphas)
    if not values:
        raise ValidationError("Order vector is empty.")
    if not all(np.isfinite(values)):
        raise ValidationError(f"Order vector {list(values)} has non-finite entries.")
    total = float(np.sum(values))
    if abs(total - 1.0) > TOL_ORDER_SUM:
        raise ValidationError(f"Orders {list(values)} sum to {total!r}, not 1.")

    pivot = int(np.argmax(values))  # argmax returns the lowest index on ties
    if all(a >= 0 for a in values):
        case = OrderCase.CASE_I
    else:
        above_one = [a for a in values if a > 1]
        if len(above_one) > 1:
            raise ValidationError(f"Orders {list(values)} have two components above 1.")
        if len(above_one) == 1 and all(a <= 0 for i, a in enumerate(values) if i != pivot):
            case = OrderCase.CASE_II
        else:
            raise ValidationError(
                f"Orders {list(values)} are neither all nonnegative nor one above 1 with the rest nonpositive."
            )
    return OrderVector(values, case, pivot)


def _coerce_orders(orders: Union[OrderVector, Sequence[float]]) -> OrderVector:
    return orders if isinstance(orders, OrderVector) else validate_orders(orders)


def _pivot_value(orders: OrderVector, pivot_override: Optional[int]) -> float:
    if pivot_override is None:
        value = orders.alpha_star
    else:
        if not 0 <= pivot_override < orders.d_plus_one:
            raise ValidationError(f"Pivot index {pivot_override} is out of range.")
        value = orders.alphas[pivot_override]
    if value == 1.0:
        raise SingularPivotError(
            f"Pivot order equals 1 for orders {list(orders.alphas)}; the direct formula is singular. "
            f"Use kl_mixture_limit for the λ → 1 limit."
        )
    return value


def _log_power_sum(alphas: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """
    log Σ_x Π_k p_k(x)^{α_k} along the last axis.
    :param alphas: shape (K,).
    :param masses: shape (K, ..., n).
    :return: array of shape masses.shape[1:-1]; +inf when a zero mass meets a negative order.
    """
    shape = (-1,) + (1,) * (masses.ndim - 1)
    a = alphas.reshape(shape)
    negative_zero = np.any((a < 0) & (masses == 0), axis=(0, masses.ndim - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        # xlogy gives 0·log 0 = 0, which realizes the 0^0 = 1 convention
        terms = xlogy(a, masses).sum(axis=0)
        out = logsumexp(terms, axis=-1)
    return np.where(negative_zero, np.inf, out)


def _stack(pmfs: Sequence[Pmf], expected: int) -> np.ndarray:
    if len(pmfs) != expected:
        raise DimensionMismatchError(f"Expected {expected} PMFs for the order vector, got {len(pmfs)}.")
    for p in pmfs[1:]:
        pmfs[0].require_same_outcomes(p)
    return np.stack([p.mass for p in pmfs])


def _scaled(prefactor: float, log_sum: float) -> float:
    # a zero sum in case I means disjoint supports: the divergence is +inf
    if log_sum == -np.inf:
        return np.inf
    if log_sum == np.inf:
        return np.inf if prefactor > 0 else -np.inf
    return prefactor * log_sum


def renyi_multivariate(orders: Union[OrderVector, Sequence[float]], pmfs: Sequence[Pmf],
                       pivot_override: Optional[int] = None) -> float:
    """(1/(α_piv − 1)) log Σ_x Π_k p_k(x)^{α_k}; α_piv is α_* unless overridden."""
    orders = _coerce_orders(orders)
    alpha_piv = _pivot_value(orders, pivot_override)
    masses = _stack(pmfs, orders.d_plus_one)
    log_sum = float(_log_power_sum(orders.as_array(), masses))
    return _scaled(1.0 / (alpha_piv - 1.0), log_sum)


def renyi_bivariate(alpha: float, p: Pmf, q: Pmf) -> float:
    if alpha < 0:
        raise ValidationError(f"Rényi order must be nonnegative, got {alpha!r}.")
    p.require_same_outcomes(q)
    if alpha == 1.0:
        return float(rel_entr(p.mass, q.mass).sum())
    orders = OrderVector((float(alpha), 1.0 - float(alpha)),
                         OrderCase.CASE_I if alpha <= 1 else OrderCase.CASE_II, 0)
    return renyi_multivariate(orders, (p, q), pivot_override=0)


def _as_conditional(item: Union[Pmf, CondPmf], given: Sequence[str]) -> CondPmf:
    return CondPmf.from_pmf(item, given) if isinstance(item, Pmf) else item


def renyi_conditional(orders: Union[OrderVector, Sequence[float]], beta: float,
                      cond_pmfs: Sequence[Union[Pmf, CondPmf]], p_g: Pmf,
                      pivot_override: Optional[int] = None) -> float:
    """
    (β/(α_piv − 1)) log Σ_g p_G(g) (Σ_x Π_k p_k(x|g)^{α_k})^{1/β}.
    :param cond_pmfs: d+1 conditionals; a plain Pmf stands for a g-independent conditional.
    :param p_g: full-support distribution of the conditioning variable.
    """
    orders = _coerce_orders(orders)
    if not beta > 0:
        raise ValidationError(f"β must be positive, got {beta!r}.")
    alpha_piv = _pivot_value(orders, pivot_override)
    p_g.require_full_support("p_G")
    conds = [_as_conditional(c, p_g.outcomes) for c in cond_pmfs]
    if len(conds) != orders.d_plus_one:
        raise DimensionMismatchError(f"Expected {orders.d_plus_one} conditionals, got {len(conds)}.")
    for c in conds:
        if c.given != p_g.outcomes or c.outcomes != conds[0].outcomes:
            raise DimensionMismatchError("Conditionals must share the main and conditioning outcome sets with p_G.")
    masses = np.stack([c.mass for c in conds])  # (K, |G|, |X|)
    inner = _log_power_sum(orders.as_array(), masses)  # (|G|,)
    if np.any(inner == np.inf):
        log_sum = np.inf
    else:
        log_sum = float(logsumexp(inner / beta, b=p_g.mass))
    return _scaled(beta / (alpha_piv - 1.0), log_sum)


def _check_gammas(gammas: Sequence[float], d: int) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    if g.size != d:
        raise DimensionMismatchError(f"Expected {d} weights γ, got {g.size}.")
    if np.any(g < 0) or abs(g.sum() - 1.0) > TOL_ORDER_SUM:
        raise ValidationError(f"Weights γ = {g.tolist()} must be nonnegative and sum to 1.")
    return g


def kl_mixture_limit(gammas: Sequence[float], pmfs: Sequence[Pmf]) -> float:
    """Σ_k γ_k D_KL(p_0 ‖ p_k), the λ → 1 limit along the order path."""
    g = _check_gammas(gammas, len(pmfs) - 1)
    masses = _stack(pmfs, len(pmfs))
    for p in pmfs:
        p.require_full_support()
    return float(sum(gk * rel_entr(masses[0], masses[k + 1]).sum() for k, gk in enumerate(g)))


def tropical_limit(gammas: Sequence[float], pmfs: Sequence[Pmf]) -> float:
    """max_x log[p_0(x) / Π_k p_k(x)^{γ_k}], the λ → ∞ limit along the order path."""
    g = _check_gammas(gammas, len(pmfs) - 1)
    masses = _stack(pmfs, len(pmfs))
    for p in pmfs:
        p.require_full_support()
    values = np.log(masses[0]) - (g[:, None] * np.log(masses[1:])).sum(axis=0)
    return float(values.max())


# ---- ORDER PATH ----

@dataclass(frozen=True)
class PathSpec:
    gammas: Tuple[float, ...]
    lam: float

    def __post_init__(self) -> None:
        g = _check_gammas(self.gammas, len(self.gammas))
        object.__setattr__(self, "gammas", tuple(float(x) for x in g))
        if self.lam == 1.0:
            raise ValidationError("λ = 1 is excluded from the order path; use kl_mixture_limit there.")
        if self.lam < self.lower_bound:
            raise ValidationError(f"λ = {self.lam!r} is below the monotone region bound {self.lower_bound!r}.")

    @property
    def lower_bound(self) -> float:
        return path_lower_bound(self.gammas)


def path_lower_bound(gammas: Sequence[float]) -> float:
    return float(max(g / (g + 1.0) for g in gammas))


def path_orders(spec: PathSpec) -> OrderVector:
    alphas = [spec.lam] + [(1.0 - spec.lam) * g for g in spec.gammas]
    orders = validate_orders(alphas)
    if orders.pivot != 0:
        raise ValidationError(f"Path orders {alphas} do not pivot on α_0.")
    return orders


class SweepRow(NamedTuple):
    lam: float
    divergence: float
    kl_limit: float
    tropical_limit: float


def lambda_grid(gammas: Sequence[float], lam_min: Optional[float], lam_max: float, points: int) -> List[float]:
    """Evenly spaced λ values in the monotone region, skipping the excluded point λ = 1."""
    lo = path_lower_bound(gammas) if lam_min is None else max(lam_min, path_lower_bound(gammas))
    if lam_max <= lo or points < 2:
        raise ValidationError("λ grid needs lam_max above the region bound and at least two points.")
    grid = np.linspace(lo, lam_max, points)
    # a grid point sitting exactly on the excluded λ = 1 is moved just below it
    return [float(x) if x != 1.0 else 1.0 - 1e-6 for x in grid]


def sweep_path(pmfs: Sequence[Pmf], gammas: Sequence[float], lambdas: Sequence[float]) -> List[SweepRow]:
    kl = kl_mixture_limit(gammas, pmfs)
    trop = tropical_limit(gammas, pmfs)
    rows = []
    for lam in lambdas:
        orders = path_orders(PathSpec(tuple(gammas), float(lam)))
        rows.append(SweepRow(float(lam), renyi_multivariate(orders, pmfs), kl, trop))
    return rows


# ---- DATA PROCESSING ----

class DpiReport(NamedTuple):
    before: float
    after: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.before - self.after


def _holds(before: float, after: float) -> bool:
    if before == np.inf:
        return True
    return bool(before >= after - TOL_INEQ)


def dpi_check(orders: Union[OrderVector, Sequence[float]], pmfs: Sequence[Pmf], op: StochasticOp) -> DpiReport:
    orders = _coerce_orders(orders)
    before = renyi_multivariate(orders, pmfs)
    after = renyi_multivariate(orders, [apply_stochastic(op, p) for p in pmfs])
    return DpiReport(before, after, _holds(before, after))


def main_system_dpi_check(orders: Union[OrderVector, Sequence[float]], beta: float,
                          cond_pmfs: Sequence[Union[Pmf, CondPmf]], p_g: Pmf,
                          kernels: Sequence[StochasticOp]) -> DpiReport:
    """Apply the kernel ``kernels[g]`` to every conditional p_k(·|g); the divergence must not grow."""
    orders = _coerce_orders(orders)
    conds = [_as_conditional(c, p_g.outcomes) for c in cond_pmfs]
    if len(kernels) != len(p_g):
        raise DimensionMismatchError(f"Expected one kernel per conditioning outcome ({len(p_g)}), got {len(kernels)}.")
    mapped = []
    for c in conds:
        rows = [apply_stochastic(kernels[g], c.row(g)).mass for g in range(len(p_g))]
        mapped.append(CondPmf(np.stack(rows), kernels[0].outputs, c.given))
    before = renyi_conditional(orders, beta, conds, p_g)
    after = renyi_conditional(orders, beta, mapped, p_g)
    return DpiReport(before, after, _holds(before, after))


class ConditioningDpiReport(NamedTuple):
    before: float
    after: float
    unconditional: float
    holds: bool
    unconditional_holds: bool


def conditioning_dpi_check(orders: Union[OrderVector, Sequence[float]], p0_cond: CondPmf,
                           r_pmfs: Sequence[Pmf], p_g: Pmf, op: StochasticOp) -> ConditioningDpiReport:
    """
    Postprocess the conditioning variable G → H and compare conditional divergences.
    The reference PMFs r_k do not depend on G, so only p_0 is re-conditioned through
    the Bayes pseudo-inverse: q_0(x|h) = Σ_g t†(g|h) p_0(x|g).
    """
    orders = _coerce_orders(orders)
    if orders.pivot != 0:
        raise ValidationError(f"Conditioning DPI requires α_0 to be the largest order; pivot is {orders.pivot}.")
    beta = orders.alphas[0]
    if op.inputs != p_g.outcomes:
        raise DimensionMismatchError("Kernel inputs must be the conditioning outcomes of p_G.")

    q_h = apply_stochastic(op, p_g)
    reverse = bayes_pseudo_inverse(op, p_g)  # (|G|, |H|)
    q0 = CondPmf(reverse.matrix.T @ p0_cond.mass, p0_cond.outcomes, op.outputs)

    before = renyi_conditional(orders, beta, [p0_cond, *r_pmfs], p_g)
    after = renyi_conditional(orders, beta, [q0, *r_pmfs], q_h)
    p0_marginal = Pmf(p_g.mass @ p0_cond.mass, p0_cond.outcomes)
    unconditional = renyi_multivariate(orders, [p0_marginal, *r_pmfs])
    log.debug("conditioning DPI: before=%s after=%s unconditional=%s", before, after, unconditional)
    return ConditioningDpiReport(before, after, unconditional,
                                 _holds(before, after), _holds(before, unconditional))
