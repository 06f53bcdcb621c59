# oracles/random_instances.py
"""Seeded random draws for property suites. Same seed, same draws."""
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from lib.betting import OddsProfile, RiskVector, risk_to_orders
from lib.divergences import OrderVector
from lib.errors import ValidationError
from lib.gpt_betting import GptModel, Measurement, ModelKind, StateEnsemble
from lib.prob_core import CondPmf, JointPmf, Pmf, StochasticOp

# keeps Dirichlet draws inside the full-support threshold
_FLOOR = 1e-9


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent per-instance generators, stable under reordering of the work."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _simplex(rng: np.random.Generator, n: int, size: Union[int, Tuple[int, ...]] = ()) -> np.ndarray:
    draw = rng.dirichlet(np.ones(n), size=size)
    draw = np.maximum(draw, _FLOOR)
    return draw / draw.sum(axis=-1, keepdims=True)


def random_pmf(rng: np.random.Generator, n: int) -> Pmf:
    return Pmf(_simplex(rng, n))


def random_cond(rng: np.random.Generator, n_given: int, n: int) -> CondPmf:
    return CondPmf(_simplex(rng, n, size=n_given))


def random_joint(rng: np.random.Generator, nx: int, ng: int) -> JointPmf:
    return JointPmf(_simplex(rng, nx * ng).reshape(nx, ng))


def random_kernel(rng: np.random.Generator, n_in: int, n_out: int) -> StochasticOp:
    return StochasticOp(_simplex(rng, n_out, size=n_in).T)


def random_risk(rng: np.random.Generator, d: int, case: Optional[str] = None, max_r: float = 4.0) -> RiskVector:
    """
    Admissible risk vector; the case is a coin flip unless given.
    Case I draws R_k uniformly in [1, max_r]; case II draws 1 − R_k as a random split of a
    total slack below one, which keeps Σ R_k > d − 1.
    """
    if case is None:
        case = "I" if rng.random() < 0.5 else "II"
    if case == "I":
        return RiskVector(tuple(rng.uniform(1.0, max_r, size=d)))
    if case == "II":
        slack = rng.uniform(0.05, 0.95)
        return RiskVector(tuple(1.0 - slack * _simplex(rng, d)))
    raise ValidationError(f"Unknown risk case {case!r}.")


def random_orders(rng: np.random.Generator, d: int, case: Optional[str] = None,
                  pivot_zero: bool = False) -> OrderVector:
    # R_k ≤ 2 keeps α_k ≤ α_0, so α_0 stays the pivot
    return risk_to_orders(random_risk(rng, d, case=case, max_r=2.0 if pivot_zero else 4.0))


def random_odds(rng: np.random.Generator, n: int, d: int, fair: bool = False,
                fairness_range: Tuple[float, float] = (0.8, 1.25)) -> OddsProfile:
    pmfs = [random_pmf(rng, n) for _ in range(d)]
    factors = np.ones(d) if fair else rng.uniform(*fairness_range, size=d)
    return OddsProfile.from_pmfs(pmfs, factors)


def random_instance(kind: str, dims: Sequence[int], rng: np.random.Generator):
    """
    One seeded draw by kind name.
    :param kind: one of pmf, joint, kernel, orders, risk, odds.
    :param dims: (n,), (nx, ng), (n_in, n_out), (d,), (d,), (n, d).
    """
    if kind == "pmf":
        return random_pmf(rng, dims[0])
    if kind == "joint":
        return random_joint(rng, dims[0], dims[1])
    if kind == "kernel":
        return random_kernel(rng, dims[0], dims[1])
    if kind == "orders":
        return random_orders(rng, dims[0])
    if kind == "risk":
        return random_risk(rng, dims[0])
    if kind == "odds":
        return random_odds(rng, dims[0], dims[1])
    raise ValidationError(f"Unknown instance kind {kind!r}.")


# ---- GPT DRAWS ----

def random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _inverse_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    return (vecs / np.sqrt(vals)) @ vecs.conj().T


def random_povm(rng: np.random.Generator, n: int, k: int) -> List[np.ndarray]:
    """k random PSD operators rescaled by S^{-1/2}(·)S^{-1/2} so that they sum to I."""
    parts = []
    for _ in range(k):
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        parts.append(g @ g.conj().T)
    root = _inverse_sqrt(sum(parts))
    effects = [root @ a @ root for a in parts]
    return [(e + e.conj().T) / 2 for e in effects]


def random_ensemble(model: GptModel, rng: np.random.Generator, size: int) -> StateEnsemble:
    prior = random_pmf(rng, size)
    if model.kind is ModelKind.QUANTUM:
        states = np.stack([model.embed_density(random_density(rng, model.n)) for _ in range(size)])
    else:
        states = _simplex(rng, model.dim, size=size)
    return StateEnsemble(prior, states)


def random_measurement(model: GptModel, rng: np.random.Generator, k: int) -> Measurement:
    if model.kind is ModelKind.QUANTUM:
        return Measurement(model, model.embed_povm(random_povm(rng, model.n, k)))
    # classical effects: a column-stochastic (k, n) response matrix
    return Measurement(model, _simplex(rng, k, size=model.dim).T)
