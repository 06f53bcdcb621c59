# oracles/monte_carlo.py
"""Certainty equivalent by sampling: draw outcomes, average utility, invert on the diagonal."""
from typing import NamedTuple, Optional, Union

import numpy as np

from lib.betting import BettingProfile, OddsProfile, RiskVector
from lib.config import OracleConfig
from lib.errors import DimensionMismatchError, ValidationError
from lib.prob_core import JointPmf, Pmf


class MonteCarloEstimate(NamedTuple):
    estimate: float
    stderr: float
    samples: int


def _log_mean_exp(values: np.ndarray) -> float:
    top = float(values.max())
    return top + float(np.log(np.mean(np.exp(values - top))))


def monte_carlo_ice(p0: Union[Pmf, JointPmf], odds: OddsProfile, bets: BettingProfile, risk: RiskVector,
                    cfg: OracleConfig, rng: Optional[np.random.Generator] = None) -> MonteCarloEstimate:
    """
    Sample-average certainty equivalent with a batch-means standard error.

    Utilities are averaged as Π_k W_k^{1−R_k}; the constant 1/Π_k(1−R_k) cancels in the
    inversion, which keeps the average positive whatever the signs of 1 − R_k.
    """
    if bets.d != risk.d or odds.d != risk.d:
        raise DimensionMismatchError("Bets, odds and risk vector disagree on the number of lotteries.")
    if isinstance(p0, JointPmf):
        if not bets.conditional:
            raise ValidationError("A joint game needs conditional bets.")
        weights = p0.mass.ravel()  # (x, g) row-major
        wealth = (np.swapaxes(bets.stacked(), 1, 2) * odds.odds[:, :, None]).reshape(risk.d, -1)
    else:
        if bets.conditional:
            raise ValidationError("An unconditional game needs unconditional bets.")
        weights = p0.mass
        wealth = bets.stacked() * odds.odds

    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    cells = rng.choice(weights.size, size=cfg.mc_samples, p=weights / weights.sum())
    drawn = wealth[:, cells]
    if np.any(drawn <= 0):
        raise ValidationError("A sampled outcome leaves zero wealth; the utility is undefined there.")
    log_u = (1.0 - risk.as_array()) @ np.log(drawn)

    inverse = 1.0 / risk.exponent_sum
    estimate = float(np.exp(_log_mean_exp(log_u) * inverse))
    batches = np.array_split(log_u, cfg.mc_batches)
    per_batch = np.array([np.exp(_log_mean_exp(b) * inverse) for b in batches])
    stderr = float(per_batch.std(ddof=1) / np.sqrt(len(per_batch))) if len(per_batch) > 1 else 0.0
    return MonteCarloEstimate(estimate, stderr, cfg.mc_samples)
