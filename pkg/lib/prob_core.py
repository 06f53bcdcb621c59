# lib/prob_core.py
"""Finite probability substrate: PMFs, conditional and joint PMFs, Markov kernels.

Every value is immutable after construction (numpy buffers are marked read-only),
so instances can be shared freely between callers.
"""
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from lib.errors import DegeneratePosteriorError, DimensionMismatchError, ValidationError

# Absolute tolerance on total mass; constructors renormalize only below TOL_RENORM.
TOL_NORM = 1e-12
TOL_RENORM = 1e-9
TOL_SUPPORT = 1e-12

Labels = Tuple[str, ...]
LabelsLike = Optional[Sequence[Union[str, int]]]


def _labels(labels: LabelsLike, n: int, what: str) -> Labels:
    if labels is None:
        return tuple(str(i) for i in range(n))
    out = tuple(str(label) for label in labels)
    if len(out) != n:
        raise DimensionMismatchError(f"{what} has {n} entries but {len(out)} labels {list(out)}.")
    if len(set(out)) != n:
        raise ValidationError(f"{what} has duplicate labels {list(out)}.")
    return out


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def _normalized(mass: np.ndarray, axis: int, what: str) -> np.ndarray:
    """Check nonnegativity and unit sums along ``axis``; renormalize tiny deviations."""
    if mass.size == 0:
        raise ValidationError(f"{what} is empty.")
    if not np.all(np.isfinite(mass)):
        raise ValidationError(f"{what} contains non-finite masses.")
    if np.any(mass < 0):
        raise ValidationError(f"{what} has a negative mass ({mass.min()!r}).")
    total = mass.sum(axis=axis, keepdims=True)
    deviation = np.abs(total - 1.0)
    worst = float(deviation.max())
    if worst > TOL_RENORM:
        raise ValidationError(f"{what} sums to {float(total.ravel()[deviation.ravel().argmax()])!r}, not 1.")
    if worst > TOL_NORM:
        mass = mass / total
    return mass


# ---- PMF ----

@dataclass(frozen=True, eq=False)
class Pmf:
    mass: np.ndarray
    outcomes: Optional[Labels] = None

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 1:
            raise ValidationError(f"PMF mass must be one-dimensional, got shape {mass.shape}.")
        mass = _normalized(mass, axis=0, what="PMF")
        object.__setattr__(self, "mass", _frozen(mass))
        object.__setattr__(self, "outcomes", _labels(self.outcomes, mass.size, "PMF"))

    @classmethod
    def uniform(cls, outcomes: Union[int, Sequence[str]]) -> "Pmf":
        labels = None if isinstance(outcomes, int) else outcomes
        n = outcomes if isinstance(outcomes, int) else len(outcomes)
        return cls(np.full(n, 1.0 / n), labels)

    @classmethod
    def point(cls, n: int, index: int, outcomes: LabelsLike = None) -> "Pmf":
        mass = np.zeros(n)
        mass[index] = 1.0
        return cls(mass, outcomes)

    def __len__(self) -> int:
        return self.mass.size

    def __repr__(self) -> str:
        return f"Pmf({dict(zip(self.outcomes, np.round(self.mass, 6).tolist()))})"

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.mass >= TOL_SUPPORT))

    def require_full_support(self, what: str = "PMF") -> "Pmf":
        if not self.full_support:
            raise ValidationError(f"{what} must have full support; masses are {self.mass.tolist()}.")
        return self

    def require_same_outcomes(self, other: "Pmf", what: str = "PMFs") -> None:
        if self.outcomes != other.outcomes:
            raise DimensionMismatchError(
                f"{what} must share one outcome set: {list(self.outcomes)} vs {list(other.outcomes)}."
            )

    def allclose(self, other: "Pmf", atol: float = 1e-12) -> bool:
        return self.outcomes == other.outcomes and bool(np.allclose(self.mass, other.mass, rtol=0, atol=atol))

    def to_json(self) -> dict:
        return {"outcomes": list(self.outcomes), "mass": self.mass.tolist()}


# ---- CONDITIONAL PMF ----

@dataclass(frozen=True, eq=False)
class CondPmf:
    """p(x|g) stored as a (|G|, |X|) array; every row is a PMF over the main outcomes."""

    mass: np.ndarray
    outcomes: Optional[Labels] = None
    given: Optional[Labels] = None

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 2:
            raise ValidationError(f"Conditional PMF mass must be two-dimensional, got shape {mass.shape}.")
        mass = _normalized(mass, axis=1, what="Conditional PMF row")
        object.__setattr__(self, "mass", _frozen(mass))
        object.__setattr__(self, "outcomes", _labels(self.outcomes, mass.shape[1], "Conditional PMF outcomes"))
        object.__setattr__(self, "given", _labels(self.given, mass.shape[0], "Conditional PMF conditioning set"))

    @classmethod
    def from_pmf(cls, p: Pmf, given: Sequence[str]) -> "CondPmf":
        """The g-independent conditional p(x|g) = p(x)."""
        return cls(np.tile(p.mass, (len(given), 1)), p.outcomes, tuple(given))

    def row(self, index: int) -> Pmf:
        return Pmf(self.mass[index], self.outcomes)

    @property
    def independent_of_given(self) -> bool:
        return bool(np.allclose(self.mass, self.mass[0], rtol=0, atol=TOL_NORM))

    def to_json(self) -> dict:
        return {"outcomes": list(self.outcomes), "given": list(self.given), "mass": self.mass.tolist()}


# ---- JOINT PMF ----

@dataclass(frozen=True, eq=False)
class JointPmf:
    """j(x, g) stored as a (|X|, |G|) array."""

    mass: np.ndarray
    outcomes: Optional[Labels] = None
    given: Optional[Labels] = None

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 2:
            raise ValidationError(f"Joint PMF mass must be two-dimensional, got shape {mass.shape}.")
        flat = _normalized(mass.ravel(), axis=0, what="Joint PMF")
        object.__setattr__(self, "mass", _frozen(flat.reshape(mass.shape)))
        object.__setattr__(self, "outcomes", _labels(self.outcomes, mass.shape[0], "Joint PMF rows"))
        object.__setattr__(self, "given", _labels(self.given, mass.shape[1], "Joint PMF columns"))

    @classmethod
    def product(cls, p: Pmf, q: Pmf) -> "JointPmf":
        return cls(np.outer(p.mass, q.mass), p.outcomes, q.outcomes)

    @classmethod
    def from_conditional(cls, cond: CondPmf, p_g: Pmf) -> "JointPmf":
        if cond.given != p_g.outcomes:
            raise DimensionMismatchError("Conditioning set of the conditional PMF and p_G differ.")
        return cls((cond.mass * p_g.mass[:, None]).T, cond.outcomes, cond.given)

    def to_json(self) -> dict:
        return {"outcomes": list(self.outcomes), "given": list(self.given), "mass": self.mass.tolist()}


class Marginals(NamedTuple):
    p_x: Pmf
    p_g: Pmf
    cond: CondPmf
    # conditioning outcomes with zero marginal; their rows in ``cond`` are placeholders
    undefined: Tuple[str, ...]

    def on_support(self) -> Tuple[Pmf, CondPmf]:
        """p_G and p_{X|G} restricted to conditioning outcomes of positive mass."""
        keep = self.p_g.mass > 0
        if keep.all():
            return self.p_g, self.cond
        given = tuple(g for g, k in zip(self.p_g.outcomes, keep) if k)
        return Pmf(self.p_g.mass[keep], given), CondPmf(self.cond.mass[keep], self.cond.outcomes, given)


def marginals_and_conditionals(j: JointPmf) -> Marginals:
    p_x = Pmf(j.mass.sum(axis=1), j.outcomes)
    col = j.mass.sum(axis=0)
    p_g = Pmf(col, j.given)
    rows = np.empty((len(j.given), len(j.outcomes)))
    undefined = []
    for gi, total in enumerate(col):
        if total > 0:
            rows[gi] = j.mass[:, gi] / total
        else:
            # flagged placeholder: the uniform row keeps the CondPmf valid
            rows[gi] = 1.0 / len(j.outcomes)
            undefined.append(j.given[gi])
    return Marginals(p_x, p_g, CondPmf(rows, j.outcomes, j.given), tuple(undefined))


# ---- STOCHASTIC OPERATORS ----

@dataclass(frozen=True, eq=False)
class StochasticOp:
    """Markov kernel t(y|x) stored as a (|Y|, |X|) column-stochastic matrix."""

    matrix: np.ndarray
    inputs: Optional[Labels] = None
    outputs: Optional[Labels] = None

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValidationError(f"Kernel matrix must be two-dimensional, got shape {matrix.shape}.")
        matrix = _normalized(matrix, axis=0, what="Kernel column")
        object.__setattr__(self, "matrix", _frozen(matrix))
        object.__setattr__(self, "inputs", _labels(self.inputs, matrix.shape[1], "Kernel inputs"))
        object.__setattr__(self, "outputs", _labels(self.outputs, matrix.shape[0], "Kernel outputs"))

    @classmethod
    def identity(cls, labels: Union[int, Sequence[str]]) -> "StochasticOp":
        n = labels if isinstance(labels, int) else len(labels)
        names = None if isinstance(labels, int) else labels
        return cls(np.eye(n), names, names)

    @classmethod
    def constant(cls, inputs: Union[int, Sequence[str]], r: Pmf) -> "StochasticOp":
        """Every input is mapped to the same output distribution ``r``."""
        n = inputs if isinstance(inputs, int) else len(inputs)
        names = None if isinstance(inputs, int) else inputs
        return cls(np.tile(r.mass[:, None], (1, n)), names, r.outcomes)

    @classmethod
    def deterministic(cls, mapping: Sequence[int], n_outputs: int,
                      inputs: LabelsLike = None, outputs: LabelsLike = None) -> "StochasticOp":
        matrix = np.zeros((n_outputs, len(mapping)))
        matrix[list(mapping), np.arange(len(mapping))] = 1.0
        return cls(matrix, inputs, outputs)

    def column(self, index: int) -> Pmf:
        return Pmf(self.matrix[:, index], self.outputs)

    def to_json(self) -> dict:
        return {"inputs": list(self.inputs), "outputs": list(self.outputs), "matrix": self.matrix.tolist()}


def apply_stochastic(op: StochasticOp, p: Pmf) -> Pmf:
    if op.inputs != p.outcomes:
        raise DimensionMismatchError(
            f"Kernel inputs {list(op.inputs)} do not match PMF outcomes {list(p.outcomes)}."
        )
    return Pmf(op.matrix @ p.mass, op.outputs)


def compose(second: StochasticOp, first: StochasticOp) -> StochasticOp:
    """The kernel ``second ∘ first`` (apply ``first``, then ``second``)."""
    if second.inputs != first.outputs:
        raise DimensionMismatchError("Kernels cannot be composed: outputs of the first are not inputs of the second.")
    return StochasticOp(second.matrix @ first.matrix, first.inputs, second.outputs)


def joint_from_kernel(p: Pmf, op: StochasticOp) -> JointPmf:
    """j(x, y) = p(x) t(y|x)."""
    if op.inputs != p.outcomes:
        raise DimensionMismatchError("Kernel inputs do not match PMF outcomes.")
    return JointPmf((op.matrix * p.mass[None, :]).T, p.outcomes, op.outputs)


def bayes_pseudo_inverse(op: StochasticOp, p: Pmf) -> StochasticOp:
    """
    Bayes reversal t†(x|y) = p(x) t(y|x) / q(y) with q = t p.
    :param op: kernel from X to Y.
    :param p: full-support prior on X.
    :return: kernel from Y back to X.
    """
    p.require_full_support("Prior of the pseudo-inverse")
    q = apply_stochastic(op, p)
    if np.any(q.mass < TOL_SUPPORT):
        raise DegeneratePosteriorError(
            f"Output distribution {q.mass.tolist()} has a zero entry; the posterior is undefined there."
        )
    reverse = (op.matrix * p.mass[None, :]).T / q.mass[None, :]
    return StochasticOp(reverse, op.outputs, op.inputs)


def expectation(p: Pmf, f: Union[Sequence[float], np.ndarray, Mapping[str, float], Callable[[str], float]]) -> float:
    """Σ_x f(x) p(x); ``f`` may be an array in outcome order, a label mapping or a callable on labels."""
    if callable(f):
        values = np.array([f(label) for label in p.outcomes], dtype=float)
    elif isinstance(f, Mapping):
        missing = [label for label in p.outcomes if label not in f]
        if missing:
            raise DimensionMismatchError(f"Function is undefined on outcomes {missing}.")
        values = np.array([f[label] for label in p.outcomes], dtype=float)
    else:
        values = np.asarray(f, dtype=float)
        if values.shape != p.mass.shape:
            raise DimensionMismatchError(f"Function has {values.size} values for {len(p)} outcomes.")
    return float(np.dot(values, p.mass))
