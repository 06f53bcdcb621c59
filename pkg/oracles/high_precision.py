# oracles/high_precision.py
"""50-digit reference values for the published fixtures, computed with mpmath.

Inputs are given as strings or integer ratios so that no binary rounding enters
before the high-precision arithmetic starts.
"""
from typing import Callable, List, NamedTuple, Sequence, Union

import mpmath as mp

DPS = 50

Number = Union[str, int, float, mp.mpf]


def _m(value: Number) -> mp.mpf:
    if isinstance(value, str) and "/" in value:
        num, den = value.split("/")
        return mp.mpf(num) / mp.mpf(den)
    return mp.mpf(value)


def _power(base: mp.mpf, exponent: mp.mpf) -> mp.mpf:
    if base == 0:
        if exponent == 0:
            return mp.mpf(1)
        return mp.mpf(0) if exponent > 0 else mp.inf
    return base ** exponent


def hp_kl(p: Sequence[Number], q: Sequence[Number]) -> mp.mpf:
    with mp.workdps(DPS):
        return mp.fsum(_m(a) * mp.log(_m(a) / _m(b)) for a, b in zip(p, q) if _m(a) > 0)


def hp_renyi_multivariate(alphas: Sequence[Number], pmfs: Sequence[Sequence[Number]], pivot: int = None) -> mp.mpf:
    with mp.workdps(DPS):
        a = [_m(x) for x in alphas]
        piv = a[pivot] if pivot is not None else max(a)
        total = mp.fsum(
            mp.fprod(_power(_m(p[x]), ak) for ak, p in zip(a, pmfs)) for x in range(len(pmfs[0]))
        )
        return mp.log(total) / (piv - 1)


def hp_renyi_bivariate(alpha: Number, p: Sequence[Number], q: Sequence[Number]) -> mp.mpf:
    with mp.workdps(DPS):
        a = _m(alpha)
        return hp_renyi_multivariate([a, 1 - a], [p, q], pivot=0)


def hp_renyi_conditional(alphas: Sequence[Number], beta: Number,
                         conds: Sequence[Sequence[Sequence[Number]]], p_g: Sequence[Number]) -> mp.mpf:
    """conds[k][g][x]; a g-independent conditional repeats its row."""
    with mp.workdps(DPS):
        a = [_m(x) for x in alphas]
        b = _m(beta)
        outer = mp.mpf(0)
        for g, pg in enumerate(p_g):
            inner = mp.fsum(
                mp.fprod(_power(_m(c[g][x]), ak) for ak, c in zip(a, conds)) for x in range(len(conds[0][g]))
            )
            outer += _m(pg) * inner ** (1 / b)
        return b / (max(a) - 1) * mp.log(outer)


def hp_tropical(gammas: Sequence[Number], pmfs: Sequence[Sequence[Number]]) -> mp.mpf:
    with mp.workdps(DPS):
        g = [_m(x) for x in gammas]
        return max(
            mp.log(_m(pmfs[0][x])) - mp.fsum(gk * mp.log(_m(p[x])) for gk, p in zip(g, pmfs[1:]))
            for x in range(len(pmfs[0]))
        )


def hp_ice(p: Sequence[Number], bets: Sequence[Sequence[Number]], odds: Sequence[Sequence[Number]],
           risk: Sequence[Number]) -> mp.mpf:
    with mp.workdps(DPS):
        r = [_m(x) for x in risk]
        expo = mp.fsum(1 - rk for rk in r)
        total = mp.fsum(
            _m(px) * mp.fprod((_m(b[x]) * _m(o[x])) ** (1 - rk) for b, o, rk in zip(bets, odds, r))
            for x, px in enumerate(p)
        )
        return total ** (1 / expo)


class Fixture(NamedTuple):
    name: str
    reference: Callable[[], mp.mpf]
    expected: float
    tolerance: float


_P = ["3/4", "1/4"]
_HALF = ["1/2", "1/2"]
_QUBIT_COND = [[["2/3", "1/3"], ["0", "1"]], [_HALF, _HALF]]

FIXTURES: List[Fixture] = [
    Fixture("renyi_bivariate_alpha2", lambda: hp_renyi_bivariate(2, _P, _HALF), 0.223144, 1e-6),
    Fixture("kl", lambda: hp_kl(_P, _HALF), 0.130812, 1e-6),
    Fixture("renyi_multivariate_three", lambda: hp_renyi_multivariate(["1/2", "1/4", "1/4"], [_P, _HALF, _HALF]),
            0.069336, 1e-6),
    Fixture("renyi_conditional_qubit", lambda: hp_renyi_conditional(["1/2", "1/2"], "1/2", _QUBIT_COND, _P),
            0.158358, 1e-6),
    Fixture("kl_mixture", lambda: hp_kl(_P, _HALF), 0.130812, 1e-6),
    Fixture("tropical_d1", lambda: hp_tropical([1], [_P, _HALF]), 0.405465, 1e-6),
    Fixture("ice_r2_rounded_bet", lambda: hp_ice(_P, [["0.634", "0.366"]], [[2, 2]], [2]), 1.0718, 1e-4),
    Fixture("advantage_ratio_qubit",
            lambda: mp.exp(hp_renyi_conditional(["1/2", "1/2"], "1/2", _QUBIT_COND, _P)), 1.1716, 1e-4),
]


def reference_values() -> List[tuple]:
    """(name, 50-digit value, expected, tolerance) for every fixture."""
    return [(f.name, f.reference(), f.expected, f.tolerance) for f in FIXTURES]
