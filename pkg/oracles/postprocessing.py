# oracles/postprocessing.py
"""Exhaustive enumeration of deterministic postprocessings of measurement outcomes."""
import itertools
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from lib.errors import DimensionMismatchError, GuardExceededError
from lib.gpt_betting import Measurement, StateEnsemble

MAX_MAPS = 10 ** 6


class PostprocessingResult(NamedTuple):
    mapping: Tuple[int, ...]  # outcome a ↦ guessed state index
    value: float


def _born_table(m: Measurement, ensemble: StateEnsemble) -> np.ndarray:
    """p(x)⟨m_a, ω_x⟩ written out entry by entry."""
    table = np.zeros((len(ensemble.prior), len(m.outcomes)))
    for x, (px, state) in enumerate(zip(ensemble.prior.mass, ensemble.states)):
        for a, effect in enumerate(m.effects):
            table[x, a] = px * float(np.dot(effect, state))
    return table


def _guard(count: int) -> None:
    if count > MAX_MAPS:
        raise GuardExceededError(f"{count} deterministic maps exceed the enumeration limit of {MAX_MAPS}.")


def exhaustive_postprocessing(m: Measurement, ensemble: StateEnsemble) -> PostprocessingResult:
    """Best success probability over every map a ↦ x; the first maximizer in lexicographic order wins."""
    table = _born_table(m, ensemble)
    n_x, n_a = table.shape
    _guard(n_x ** n_a)
    best = PostprocessingResult((), -1.0)
    for mapping in itertools.product(range(n_x), repeat=n_a):
        value = float(sum(table[x, a] for a, x in enumerate(mapping)))
        if value > best.value:
            best = PostprocessingResult(tuple(mapping), value)
    return best


def exhaustive_risk_neutral_sb(m: Measurement, ensemble: StateEnsemble, odds: Sequence[float]) -> PostprocessingResult:
    """
    One risk-neutral lottery: enumerate every postprocessing s: a ↦ g and every point-mass
    bet c: g ↦ x, scoring Σ_{x,a} p(x, a)[x = c(s(a))] o(x). The mapping reported is a ↦ c(s(a)).
    """
    table = _born_table(m, ensemble)
    o = np.asarray(odds, dtype=float)
    n_x, n_a = table.shape
    if o.shape != (n_x,):
        raise DimensionMismatchError(f"Expected {n_x} odds, got {o.size}.")
    _guard(n_x ** n_a * n_x ** n_x)
    best = PostprocessingResult((), -1.0)
    for s in itertools.product(range(n_x), repeat=n_a):
        for c in itertools.product(range(n_x), repeat=n_x):
            composite = tuple(c[g] for g in s)
            value = float(sum(table[x, a] * o[x] for a, x in enumerate(composite)))
            if value > best.value:
                best = PostprocessingResult(composite, value)
    return best
