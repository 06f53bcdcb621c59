# ingest/spec_loader.py
"""Read JSON game specs and turn them into library objects.

Encodings: a PMF is {"outcomes": [...], "mass": [...]}; conditional and joint PMFs add
"given" and use nested row-major "mass"; kernels are {"inputs", "outputs", "matrix"}
with matrix[y][x] = t(y|x); complex matrices are {"re": [[...]], "im": [[...]]}.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from lib.betting import BettingProfile, OddsProfile, RiskVector
from lib.divergences import OrderVector, validate_orders
from lib.errors import ValidationError
from lib.gpt_betting import GptModel, Measurement, StateEnsemble, build_classical, build_quantum
from lib.log import get_logger
from lib.prob_core import CondPmf, JointPmf, Pmf, StochasticOp
from utils.validation import validate_spec

log = get_logger(__name__)


def load_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"Input file '{path}' does not exist.") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"Input file '{path}' is not valid JSON: {exc}") from exc


def load_spec(path: Union[str, Path], kinds: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    spec = validate_spec(load_json(path), kinds)
    log.info("loaded %s spec from %s", spec["kind"], path)
    return spec


# ---- ELEMENTARY ENCODINGS ----

def _require(obj: Any, keys: Sequence[str], what: str) -> Dict[str, Any]:
    if not isinstance(obj, dict) or any(k not in obj for k in keys):
        raise ValidationError(f"{what} must be an object with fields {list(keys)}.")
    return obj


def pmf_from_json(obj: Any) -> Pmf:
    if isinstance(obj, list):
        return Pmf(obj)
    obj = _require(obj, ["mass"], "PMF")
    return Pmf(obj["mass"], obj.get("outcomes"))


def cond_from_json(obj: Any) -> CondPmf:
    obj = _require(obj, ["mass"], "Conditional PMF")
    return CondPmf(obj["mass"], obj.get("outcomes"), obj.get("given"))


def joint_from_json(obj: Any) -> JointPmf:
    obj = _require(obj, ["mass"], "Joint PMF")
    return JointPmf(obj["mass"], obj.get("outcomes"), obj.get("given"))


def kernel_from_json(obj: Any) -> StochasticOp:
    obj = _require(obj, ["matrix"], "Kernel")
    return StochasticOp(obj["matrix"], obj.get("inputs"), obj.get("outputs"))


def complex_matrix_from_json(obj: Any) -> np.ndarray:
    if isinstance(obj, list):
        return np.asarray(obj, dtype=complex)
    obj = _require(obj, ["re"], "Complex matrix")
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise ValidationError("Real and imaginary parts have different shapes.")
    return re + 1j * im


def _pmf_list(data: Any, path: Union[str, Path]) -> List[Pmf]:
    if isinstance(data, dict):
        if "kind" in data:
            validate_spec(data, ["divergence"])
        data = data.get("pmfs")
    if not isinstance(data, list) or not data:
        raise ValidationError(f"'{path}' does not contain a list of PMFs.")
    return [pmf_from_json(p) for p in data]


def read_pmf_list(path: Union[str, Path]) -> List[Pmf]:
    """A bare JSON list of PMFs, {"pmfs": [...]}, or a divergence spec."""
    return _pmf_list(load_json(path), path)


# ---- DIVERGENCE SPECS ----

class DivergenceInputs(NamedTuple):
    pmfs: List[Pmf]
    cond_pmfs: List[Union[Pmf, CondPmf]]
    p_g: Optional[Pmf]
    alphas: Optional[List[float]]
    beta: Optional[float]
    pivot: Optional[int]
    kernel: Optional[StochasticOp]
    kernels: List[StochasticOp]
    gammas: Optional[List[float]]


def divergence_inputs(spec: Dict[str, Any]) -> DivergenceInputs:
    conds = []
    for c in spec.get("cond_pmfs", []):
        nested = isinstance(c, dict) and isinstance(c.get("mass"), list) and c["mass"] and isinstance(c["mass"][0], list)
        conds.append(cond_from_json(c) if nested else pmf_from_json(c))
    return DivergenceInputs(
        pmfs=[pmf_from_json(p) for p in spec.get("pmfs", [])],
        cond_pmfs=conds,
        p_g=pmf_from_json(spec["p_G"]) if "p_G" in spec else None,
        alphas=spec.get("alphas"),
        beta=spec.get("beta"),
        pivot=spec.get("pivot"),
        kernel=kernel_from_json(spec["kernel"]) if "kernel" in spec else None,
        kernels=[kernel_from_json(k) for k in spec.get("kernels", [])],
        gammas=spec.get("gammas"),
    )


def divergence_file(path: Union[str, Path]) -> DivergenceInputs:
    """A divergence spec, or a bare list of PMFs with everything else left unset."""
    data = load_json(path)
    if isinstance(data, dict) and "kind" in data:
        spec = validate_spec(data, ["divergence"])
        log.info("loaded divergence spec from %s", path)
        return divergence_inputs(spec)
    return DivergenceInputs(_pmf_list(data, path), [], None, None, None, None, None, [], None)


# ---- BETTING SPECS ----

class BettingGame(NamedTuple):
    p0: Union[Pmf, JointPmf]
    odds: OddsProfile
    risk: RiskVector
    bets: Optional[BettingProfile]
    oracle: Dict[str, Any]

    @property
    def conditional(self) -> bool:
        return isinstance(self.p0, JointPmf)


def betting_game(spec: Dict[str, Any]) -> BettingGame:
    conditional = spec["kind"] == "conditional_betting"
    p0 = joint_from_json(spec["p0"]) if conditional else pmf_from_json(spec["p0"])
    odds = OddsProfile(np.asarray(spec["odds"], dtype=float), p0.outcomes)
    risk = RiskVector(tuple(spec["risk"]))
    bets = None
    if spec.get("bets") is not None:
        if conditional:
            parsed = []
            for b in spec["bets"]:
                c = cond_from_json(b)
                parsed.append(CondPmf(c.mass, p0.outcomes, p0.given) if "given" not in b else c)
            bets = BettingProfile(tuple(parsed))
        else:
            bets = BettingProfile(tuple(Pmf(pmf_from_json(b).mass, p0.outcomes) for b in spec["bets"]))
    return BettingGame(p0, odds, risk, bets, dict(spec.get("oracle", {})))


# ---- GPT SPECS ----

class GptSetup(NamedTuple):
    model: GptModel
    ensemble: StateEnsemble
    measurement: Measurement
    odds: Optional[OddsProfile]
    risk: Optional[RiskVector]
    orders: Optional[OrderVector]
    ref_pmfs: Optional[List[Pmf]]
    eta: Optional[Pmf]
    kernel: Optional[StochasticOp]


def model_from_json(obj: Any) -> GptModel:
    obj = _require(obj, ["type", "n"], "Model")
    if obj["type"] == "classical":
        return build_classical(int(obj["n"]))
    if obj["type"] == "quantum":
        return build_quantum(int(obj["n"]))
    raise ValidationError(f"Unknown model type {obj['type']!r}; use 'classical' or 'quantum'.")


def _state_vector(model: GptModel, obj: Any) -> np.ndarray:
    if model.basis is not None:
        return model.embed_density(complex_matrix_from_json(obj))
    return np.asarray(obj["mass"] if isinstance(obj, dict) else obj, dtype=float)


def gpt_setup(spec: Dict[str, Any]) -> GptSetup:
    model = model_from_json(spec["model"])
    ens = _require(spec["ensemble"], ["prior", "states"], "Ensemble")
    prior = pmf_from_json(ens["prior"])
    ensemble = StateEnsemble(prior, np.stack([_state_vector(model, s) for s in ens["states"]]))

    meas = _require(spec["measurement"], ["effects"], "Measurement")
    if model.basis is not None:
        effects = model.embed_povm([complex_matrix_from_json(e) for e in meas["effects"]])
    else:
        effects = np.asarray(meas["effects"], dtype=float)
    measurement = Measurement(model, effects, meas.get("outcomes"))

    odds = OddsProfile(np.asarray(spec["odds"], dtype=float), prior.outcomes) if "odds" in spec else None
    risk = RiskVector(tuple(spec["risk"])) if "risk" in spec else None
    orders = validate_orders(spec["orders"]) if "orders" in spec else None
    refs = [Pmf(pmf_from_json(r).mass, prior.outcomes) for r in spec["ref_pmfs"]] if "ref_pmfs" in spec else None
    eta = pmf_from_json(spec["eta"]) if "eta" in spec else None
    kernel = kernel_from_json(spec["kernel"]) if "kernel" in spec else None
    return GptSetup(model, ensemble, measurement, odds, risk, orders, refs, eta, kernel)
