# oracles/brute_force.py
"""Direct search for optimal bets.

The objective is the certainty equivalent written out from its definition,
(Σ p · Π_k (b_k o_k)^{1−R_k})^{1/Σ(1−R_k)}, with plain powers. Nothing here uses the
cascade or the divergence closed forms.
"""
import itertools
from functools import lru_cache
from math import comb
from typing import NamedTuple, Union

import numpy as np

from lib.betting import BettingProfile, OddsProfile, RiskVector
from lib.config import OracleConfig
from lib.errors import DimensionMismatchError, GuardExceededError
from lib.log import get_logger
from lib.prob_core import CondPmf, JointPmf, Pmf

log = get_logger(__name__)

MAX_ALPHABET = 4
MAX_LOTTERIES = 3
MAX_SWEEPS = 25


class BruteForceResult(NamedTuple):
    bets: BettingProfile
    log_ice: float
    evaluations: int


@lru_cache(maxsize=64)
def simplex_lattice(n: int, steps: int) -> np.ndarray:
    """All points of the simplex with coordinates in {0, 1/steps, ..., 1} (stars and bars)."""
    points = []
    for bars in itertools.combinations(range(steps + n - 1), n - 1):
        edges = (-1,) + bars + (steps + n - 1,)
        points.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    lattice = np.asarray(points, dtype=float) / steps
    lattice.setflags(write=False)
    return lattice


def lattice_steps(n: int, cfg: OracleConfig) -> int:
    """Finest lattice allowed by the resolution, coarsened until it fits the point budget."""
    steps = max(1, int(round(1.0 / cfg.grid_resolution)))
    while steps > 1 and comb(steps + n - 1, n - 1) > cfg.grid_budget:
        steps -= 1
    return steps


def _objective(weights: np.ndarray, odds: np.ndarray, risk: RiskVector, bets: np.ndarray) -> np.ndarray:
    """
    log ICE for a batch of bets.
    :param weights: (G, n) probabilities p(x, g), stored g-major.
    :param odds: (d, n).
    :param bets: (N, d, G, n).
    """
    expo = 1.0 - risk.as_array()
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        powered = (bets * odds[None, :, None, :]) ** expo[None, :, None, None]
        utility = np.prod(powered, axis=1)  # (N, G, n)
        mask = weights > 0
        total = np.where(mask[None], utility * weights[None], 0.0).sum(axis=(1, 2))
        return np.log(total) / risk.exponent_sum


def _search(weights: np.ndarray, odds: np.ndarray, risk: RiskVector, cfg: OracleConfig,
            rng: np.random.Generator):
    d, (n_g, n) = risk.d, weights.shape
    live = [g for g in range(n_g) if weights[g].sum() > 0]
    blocks = [(k, g) for k in range(d) for g in live]
    lattice = simplex_lattice(n, lattice_steps(n, cfg))

    incumbent = np.full((d, n_g, n), 1.0 / n)
    best = float(_objective(weights, odds, risk, incumbent[None])[0])
    evaluations = 1

    for sweep in range(MAX_SWEEPS):
        start = best
        for k, g in blocks:
            batch = np.repeat(incumbent[None], lattice.shape[0], axis=0)
            batch[:, k, g, :] = lattice
            values = _objective(weights, odds, risk, batch)
            evaluations += lattice.shape[0]
            i = int(np.nanargmax(values))
            if values[i] > best:
                best, incumbent = float(values[i]), batch[i].copy()
        if best - start <= 1e-13:
            break
    log.debug("grid search: %d sweeps, best log ICE %s", sweep + 1, best)

    # Dirichlet refinement around the incumbent; the concentration grows on stalled rounds
    concentration = cfg.refine_concentration
    budget = cfg.dirichlet_samples
    while budget > 0:
        size = min(cfg.refine_samples, budget)
        budget -= size
        proposals = np.repeat(incumbent[None], size, axis=0)
        whole = rng.random(size) < 0.5
        chosen = rng.integers(len(blocks), size=size)
        for i in range(size):
            targets = blocks if whole[i] else [blocks[chosen[i]]]
            for k, g in targets:
                proposals[i, k, g] = rng.dirichlet(concentration * incumbent[k, g] + 1e-6)
        values = _objective(weights, odds, risk, proposals)
        evaluations += size
        i = int(np.nanargmax(values))
        if values[i] > best:
            best, incumbent = float(values[i]), proposals[i].copy()
        else:
            concentration = min(concentration * 4.0, 1e12)
    return incumbent, best, evaluations


def brute_force_optimal_bets(p0: Union[Pmf, JointPmf], odds: OddsProfile, risk: RiskVector,
                             cfg: OracleConfig) -> BruteForceResult:
    """
    Best bets found by lattice search plus Dirichlet refinement.
    :param p0: a Pmf (no side information) or a JointPmf over outcomes × side information.
    :return: the bets, their log ICE and the number of objective evaluations.
    """
    if len(p0.outcomes) > MAX_ALPHABET or risk.d > MAX_LOTTERIES:
        raise GuardExceededError(
            f"Brute force is limited to alphabets of {MAX_ALPHABET} and {MAX_LOTTERIES} lotteries."
        )
    if odds.outcomes != p0.outcomes or odds.d != risk.d:
        raise DimensionMismatchError("Odds do not match the game.")
    conditional = isinstance(p0, JointPmf)
    if conditional and len(p0.given) > MAX_ALPHABET:
        raise GuardExceededError(f"Brute force is limited to {MAX_ALPHABET} side-information outcomes.")

    weights = p0.mass.T.copy() if conditional else p0.mass[None, :].copy()
    rng = np.random.default_rng(cfg.seed)
    bets, best, evaluations = _search(weights, odds.odds, risk, cfg, rng)

    if conditional:
        profile = BettingProfile(tuple(CondPmf(b, p0.outcomes, p0.given) for b in bets))
    else:
        profile = BettingProfile(tuple(Pmf(b[0], p0.outcomes) for b in bets))
    return BruteForceResult(profile, best, evaluations)
