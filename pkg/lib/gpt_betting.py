# lib/gpt_betting.py
"""State betting in general probabilistic theories.

States and effects live in a real Euclidean space; ⟨m, ω⟩ is the probability of the
effect m on the state ω. Quantum systems are embedded through a fixed orthonormal
Hermitian operator basis, so the Euclidean inner product is the Hilbert-Schmidt one.
"""
import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from lib.betting import (
    OddsProfile,
    RiskVector,
    optimal_bets_conditional,
    log_multi_ice_conditional,
    BettingProfile,
)
from lib.divergences import OrderVector, TOL_INEQ, renyi_conditional, renyi_multivariate, validate_orders
from lib.errors import DimensionMismatchError, PropertyViolationError, ValidationError
from lib.log import get_logger
from lib.prob_core import (
    JointPmf,
    Labels,
    Pmf,
    StochasticOp,
    marginals_and_conditionals,
)

log = get_logger(__name__)

TOL_GPT = 1e-9


class ModelKind(str, enum.Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class GptModel:
    dim: int
    unit_effect: np.ndarray
    reference_states: np.ndarray  # (n_ref, dim)
    kind: ModelKind = ModelKind.CUSTOM
    n: Optional[int] = None
    # quantum only: (dim, n, n) Hermitian basis, identity/√n first
    basis: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        u = np.array(self.unit_effect, dtype=float)
        refs = np.atleast_2d(np.array(self.reference_states, dtype=float))
        if u.shape != (self.dim,) or refs.shape[1] != self.dim:
            raise DimensionMismatchError(f"Unit effect and reference states must have dimension {self.dim}.")
        norms = refs @ u
        if np.any(np.abs(norms - 1.0) > TOL_GPT):
            raise ValidationError(f"Reference states are not normalized: ⟨u, ω⟩ = {norms.tolist()}.")
        for arr in (u, refs):
            arr.setflags(write=False)
        object.__setattr__(self, "unit_effect", u)
        object.__setattr__(self, "reference_states", refs)

    # ---- QUANTUM CONVERTERS ----

    def _require_quantum(self) -> None:
        if self.kind is not ModelKind.QUANTUM or self.basis is None:
            raise ValidationError("Operator conversion is only available for quantum models.")

    def embed_operator(self, op: np.ndarray) -> np.ndarray:
        """Coordinates Tr[B_i A] of a Hermitian operator A in the model basis."""
        self._require_quantum()
        a = np.asarray(op, dtype=complex)
        if a.shape != (self.n, self.n):
            raise DimensionMismatchError(f"Expected a {self.n}×{self.n} operator, got shape {a.shape}.")
        if np.max(np.abs(a - a.conj().T)) > TOL_GPT:
            raise ValidationError("Operator is not Hermitian.")
        return np.real(np.einsum("kij,ji->k", self.basis, a))

    def operator_of(self, vec: np.ndarray) -> np.ndarray:
        self._require_quantum()
        return np.einsum("k,kij->ij", np.asarray(vec, dtype=float), self.basis)

    def embed_density(self, rho: np.ndarray) -> np.ndarray:
        vec = self.embed_operator(rho)
        eig = np.linalg.eigvalsh(self.operator_of(vec))
        if eig.min() < -TOL_GPT:
            raise ValidationError(f"Density matrix is not positive semidefinite (eigenvalue {eig.min()!r}).")
        trace = float(np.real(np.trace(np.asarray(rho, dtype=complex))))
        if abs(trace - 1.0) > TOL_GPT:
            raise ValidationError(f"Density matrix has trace {trace!r}, not 1.")
        return vec

    def embed_povm(self, effects: Sequence[np.ndarray]) -> np.ndarray:
        vecs = np.stack([self.embed_operator(e) for e in effects])
        for i, vec in enumerate(vecs):
            eig = np.linalg.eigvalsh(self.operator_of(vec))
            if eig.min() < -TOL_GPT or eig.max() > 1.0 + TOL_GPT:
                raise ValidationError(f"POVM element {i} is not between 0 and I (eigenvalues {eig.tolist()}).")
        total = self.operator_of(vecs.sum(axis=0))
        if np.max(np.abs(total - np.eye(self.n))) > TOL_GPT:
            raise ValidationError("POVM elements do not sum to the identity.")
        return vecs


def build_classical(n: int) -> GptModel:
    if n < 2:
        raise ValidationError(f"A classical model needs at least 2 outcomes, got {n}.")
    return GptModel(dim=n, unit_effect=np.ones(n), reference_states=np.eye(n), kind=ModelKind.CLASSICAL, n=n)


def hermitian_basis(n: int) -> np.ndarray:
    """
    Orthonormal Hermitian basis of n×n operators, in this fixed order:
    I/√n; for each pair j < k the symmetric (|j⟩⟨k| + |k⟩⟨j|)/√2 then the
    antisymmetric (−i|j⟩⟨k| + i|k⟩⟨j|)/√2; then the traceless diagonals
    (Σ_{m<l} |m⟩⟨m| − l|l⟩⟨l|)/√(l(l+1)) for l = 1, ..., n−1.
    """
    elements = [np.eye(n, dtype=complex) / np.sqrt(n)]
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2.0)
            anti = np.zeros((n, n), dtype=complex)
            anti[j, k] = -1j / np.sqrt(2.0)
            anti[k, j] = 1j / np.sqrt(2.0)
            elements.extend([sym, anti])
    for l in range(1, n):
        diag = np.zeros(n)
        diag[:l] = 1.0
        diag[l] = -float(l)
        elements.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.stack(elements)


def _pure(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def build_quantum(n: int) -> GptModel:
    if n < 2:
        raise ValidationError(f"A quantum model needs Hilbert dimension at least 2, got {n}.")
    basis = hermitian_basis(n)
    embed = lambda a: np.real(np.einsum("kij,ji->k", basis, a))  # noqa: E731
    refs = []
    eye = np.eye(n)
    for j in range(n):
        refs.append(embed(_pure(eye[j])))
        for k in range(j + 1, n):
            for phase in (1, -1, 1j, -1j):
                refs.append(embed(_pure(eye[j] + phase * eye[k])))
    return GptModel(dim=n * n, unit_effect=embed(np.eye(n, dtype=complex)), reference_states=np.stack(refs),
                    kind=ModelKind.QUANTUM, n=n, basis=basis)


# ---- STATES AND MEASUREMENTS ----

@dataclass(frozen=True, eq=False)
class StateEnsemble:
    prior: Pmf
    states: np.ndarray  # (|X|, dim)

    def __post_init__(self) -> None:
        states = np.atleast_2d(np.array(self.states, dtype=float))
        if states.shape[0] != len(self.prior):
            raise DimensionMismatchError(f"{len(self.prior)} prior masses but {states.shape[0]} states.")
        self.prior.require_full_support("Ensemble prior")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    def check_model(self, model: GptModel) -> None:
        if self.states.shape[1] != model.dim:
            raise DimensionMismatchError(f"States have dimension {self.states.shape[1]}, model has {model.dim}.")
        norms = self.states @ model.unit_effect
        if np.any(np.abs(norms - 1.0) > TOL_GPT):
            raise ValidationError(f"Ensemble states are not normalized: ⟨u, ω⟩ = {norms.tolist()}.")


@dataclass(frozen=True, eq=False)
class Measurement:
    model: GptModel
    effects: np.ndarray  # (|A|, dim)
    outcomes: Optional[Labels] = None

    def __post_init__(self) -> None:
        effects = np.atleast_2d(np.array(self.effects, dtype=float))
        if effects.shape[1] != self.model.dim:
            raise DimensionMismatchError(f"Effects have dimension {effects.shape[1]}, model has {self.model.dim}.")
        if np.max(np.abs(effects.sum(axis=0) - self.model.unit_effect)) > TOL_GPT:
            raise ValidationError("Effects do not sum to the unit effect.")
        self._check_bounds(effects, self.model.reference_states, "reference")
        if self.model.kind is ModelKind.QUANTUM:
            for i, e in enumerate(effects):
                eig = np.linalg.eigvalsh(self.model.operator_of(e))
                if eig.min() < -TOL_GPT or eig.max() > 1.0 + TOL_GPT:
                    raise ValidationError(f"Effect {i} is not between 0 and I.")
        effects.setflags(write=False)
        object.__setattr__(self, "effects", effects)
        labels = self.outcomes if self.outcomes is not None else [str(a) for a in range(effects.shape[0])]
        if len(labels) != effects.shape[0]:
            raise DimensionMismatchError("Measurement labels and effects differ in number.")
        object.__setattr__(self, "outcomes", tuple(str(a) for a in labels))

    @staticmethod
    def _check_bounds(effects: np.ndarray, states: np.ndarray, what: str) -> None:
        probs = effects @ states.T
        if probs.min() < -TOL_GPT or probs.max() > 1.0 + TOL_GPT:
            raise ValidationError(f"An effect gives a probability outside [0, 1] on a {what} state.")

    def check_states(self, ensemble: StateEnsemble) -> None:
        ensemble.check_model(self.model)
        self._check_bounds(self.effects, ensemble.states, "ensemble")


def uninformative(eta: Pmf, model: GptModel) -> Measurement:
    """Trivial measurement n_b = η(b)·u: the outcome ignores the state."""
    return Measurement(model, np.outer(eta.mass, model.unit_effect), eta.outcomes)


def postprocess_measurement(m: Measurement, op: StochasticOp) -> Measurement:
    """m'_b = Σ_a t(b|a) m_a."""
    if op.inputs != m.outcomes:
        raise DimensionMismatchError(f"Kernel inputs {list(op.inputs)} are not the outcomes {list(m.outcomes)}.")
    return Measurement(m.model, op.matrix @ m.effects, op.outputs)


def outcome_joint(m: Measurement, ensemble: StateEnsemble) -> JointPmf:
    """p(x, a) = p(x)⟨m_a, ω_x⟩ over states × outcomes."""
    m.check_states(ensemble)
    probs = np.clip(ensemble.states @ m.effects.T, 0.0, None)  # (|X|, |A|)
    return JointPmf(probs * ensemble.prior.mass[:, None], ensemble.prior.outcomes, m.outcomes)


def map_postprocessing(m: Measurement, ensemble: StateEnsemble) -> Tuple[int, ...]:
    """Guess x = argmax_x p(x, a) for each outcome a; ties go to the lowest state index."""
    joint = outcome_joint(m, ensemble).mass
    return tuple(int(i) for i in np.argmax(joint, axis=0))


def sd_success(m: Measurement, ensemble: StateEnsemble) -> float:
    return float(outcome_joint(m, ensemble).mass.max(axis=0).sum())


# ---- STATE BETTING ----

def _state_odds(odds: OddsProfile, ensemble: StateEnsemble) -> None:
    if odds.outcomes != ensemble.prior.outcomes:
        raise DimensionMismatchError("Odds must be quoted on the ensemble's state labels.")


def sb_strategy_log_ice(m: Measurement, ensemble: StateEnsemble, odds: OddsProfile, bets: BettingProfile,
                        risk: RiskVector, postprocessing: Optional[StochasticOp] = None) -> float:
    """
    log ICE of a concrete strategy: the outcome a is postprocessed to g by s(g|a), then
    lottery k is bet with b_k(x|g). Without ``postprocessing`` the gambler sees a itself.
    """
    _state_odds(odds, ensemble)
    measured = m if postprocessing is None else postprocess_measurement(m, postprocessing)
    return log_multi_ice_conditional(outcome_joint(measured, ensemble), odds, bets, risk)


def sb_optimal_log_ice(m: Measurement, ensemble: StateEnsemble, odds: OddsProfile, risk: RiskVector) -> float:
    """Best log ICE over bets and postprocessings, from the conditional closed form on p(x, a)."""
    _state_odds(odds, ensemble)
    _, value = optimal_bets_conditional(outcome_joint(m, ensemble), odds, risk)
    return value


def sb_risk_neutral_value(m: Measurement, ensemble: StateEnsemble, odds: Sequence[float]) -> float:
    """Optimal CE of one risk-neutral lottery: Σ_a max_x p(x, a) o(x)."""
    o = np.asarray(odds, dtype=float)
    joint = outcome_joint(m, ensemble).mass
    if o.shape != (joint.shape[0],):
        raise DimensionMismatchError(f"Expected {joint.shape[0]} odds, got {o.size}.")
    return float((joint * o[:, None]).max(axis=0).sum())


def _monotone_terms(m: Measurement, ensemble: StateEnsemble, ref_pmfs: Sequence[Pmf],
                    orders: OrderVector, pivot_override: Optional[int]) -> Tuple[float, float]:
    marg = marginals_and_conditionals(outcome_joint(m, ensemble))
    p_a, cond = marg.on_support()
    beta = orders.alphas[0]
    conditional = renyi_conditional(orders, beta, [cond, *ref_pmfs], p_a, pivot_override=pivot_override)
    unconditional = renyi_multivariate(orders, [marg.p_x, *ref_pmfs], pivot_override=pivot_override)
    return conditional, unconditional


def informativeness_monotone(m: Measurement, ensemble: StateEnsemble, ref_pmfs: Sequence[Pmf],
                             orders: OrderVector) -> float:
    """Conditional minus unconditional divergence of the outcome statistics; zero on trivial measurements."""
    orders = orders if isinstance(orders, OrderVector) else validate_orders(orders)
    if orders.pivot != 0:
        raise ValidationError(f"The informativeness monotone needs α_0 as the largest order; pivot is {orders.pivot}.")
    for r in ref_pmfs:
        r.require_full_support("Reference PMF")
    conditional, unconditional = _monotone_terms(m, ensemble, ref_pmfs, orders, None)
    value = conditional - unconditional
    if value < -TOL_INEQ:
        raise PropertyViolationError(f"Informativeness monotone is negative ({value!r}).")
    return value


def advantage_ratio(m: Measurement, ensemble: StateEnsemble, odds: OddsProfile, risk: RiskVector,
                    eta: Optional[Pmf] = None) -> float:
    """
    Optimal ICE with ``m`` over the optimal ICE with a trivial measurement. The trivial
    value does not depend on η; by default the single-outcome measurement {u} is used.
    """
    trivial = uninformative(eta if eta is not None else Pmf([1.0]), m.model)
    numerator = sb_optimal_log_ice(m, ensemble, odds, risk)
    denominator = sb_optimal_log_ice(trivial, ensemble, odds, risk)
    log.debug("advantage: log numerator=%s log denominator=%s", numerator, denominator)
    return float(np.exp(numerator - denominator))


def state_from_pmf(p: Pmf, model: GptModel) -> np.ndarray:
    """Classical state vector of a PMF."""
    if model.kind is not ModelKind.CLASSICAL or len(p) != model.dim:
        raise DimensionMismatchError("A PMF is a state only of the classical model of the same size.")
    return p.mass.copy()
