# utils/validation.py
"""Field-level validation of JSON game specs and emitted reports.

A schema lists required and optional top-level fields with their JSON types;
anything else is rejected.
"""
import re
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Type, Union

from lib.errors import ValidationError

SPEC_VERSION = 1

# comma-separated floats, e.g. "0.5,0.25,-1e-3"
_FLOAT = r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?'
_FLOAT_LIST_RX = re.compile(rf'^\s*{_FLOAT}(?:\s*,\s*{_FLOAT})*\s*$')

JsonType = Union[Type, Tuple[Type, ...]]
NUMBER = (int, float)

ORACLE_FIELDS: Dict[str, JsonType] = {
    "seed": int,
    "grid_resolution": NUMBER,
    "grid_budget": int,
    "dirichlet_samples": int,
    "refine_samples": int,
    "refine_concentration": NUMBER,
    "mc_samples": int,
    "mc_batches": int,
    "tolerances": dict,
}

SPEC_SCHEMAS: Dict[str, Dict[str, Dict[str, JsonType]]] = {
    "divergence": {
        "required": {"version": int, "kind": str},
        "optional": {"pmfs": list, "cond_pmfs": list, "p_G": dict, "alphas": list, "beta": NUMBER,
                     "pivot": int, "kernel": dict, "kernels": list, "gammas": list, "oracle": dict},
    },
    "betting": {
        "required": {"version": int, "kind": str, "p0": dict, "odds": list, "risk": list},
        "optional": {"bets": list, "oracle": dict},
    },
    "conditional_betting": {
        "required": {"version": int, "kind": str, "p0": dict, "odds": list, "risk": list},
        "optional": {"bets": list, "oracle": dict},
    },
    "gpt": {
        "required": {"version": int, "kind": str, "model": dict, "ensemble": dict, "measurement": dict},
        "optional": {"odds": list, "risk": list, "orders": list, "ref_pmfs": list, "eta": dict,
                     "kernel": dict, "oracle": dict},
    },
}

REPORT_SCHEMAS: Dict[str, Dict[str, Dict[str, JsonType]]] = {
    "div": {"required": {"divergence": NUMBER, "case": str, "pivot": int}, "optional": {"unit": str}},
    "cond-div": {"required": {"divergence": NUMBER, "case": str, "pivot": int, "beta": NUMBER},
                 "optional": {"unit": str}},
    "dpi-check": {"required": {"before": NUMBER, "after": NUMBER, "holds": bool},
                  "optional": {"unconditional": NUMBER, "unconditional_holds": bool, "kind": str, "unit": str}},
    "ice": {"required": {"ice": NUMBER, "log_ice": NUMBER}, "optional": {"unit": str, "conditional": bool}},
    "optimize": {"required": {"bets": dict, "max_log_ice": NUMBER, "max_ice": NUMBER},
                 "optional": {"unit": str, "conditional": bool}},
    "decompose": {"required": {"log_ice": NUMBER, "divergence_term": NUMBER, "penalty_terms": list,
                               "fairness_terms": list, "recomposed": NUMBER},
                  "optional": {"conditional": bool, "orders": dict, "ice": NUMBER, "divergence_default_pivot": NUMBER,
                               "slack": NUMBER, "optimal_bets": dict, "optimal_log_ice": NUMBER, "notes": list,
                               "unit": str}},
    "side-info": {"required": {"gain": NUMBER, "conditional_optimum": NUMBER, "unconditional_optimum": NUMBER},
                  "optional": {"unit": str}},
    "gpt-bet": {"required": {"optimal_log_ice": NUMBER}, "optional": {"advantage_ratio": NUMBER,
                                                                      "log_advantage": NUMBER,
                                                                      "risk_neutral_value": NUMBER, "unit": str}},
    "sd": {"required": {"sd_success": NUMBER, "map": list}, "optional": {"exhaustive_success": NUMBER}},
    "monotone": {"required": {"monotone": NUMBER}, "optional": {"postprocessed": NUMBER, "unit": str}},
    "oracle": {"required": {"closed_form": NUMBER, "brute_force": NUMBER, "gap": NUMBER},
               "optional": {"monte_carlo": NUMBER, "stderr": NUMBER, "analytic_ice": NUMBER, "evaluations": int,
                            "unit": str}},
    "verify-all": {"required": {"passed": bool, "suites": list}, "optional": {"seed": int}},
}


def is_valid_float_list(text: str) -> bool:
    return bool(_FLOAT_LIST_RX.match(text))


def parse_float_list(text: str, what: str = "value list") -> List[float]:
    if not is_valid_float_list(text):
        raise ValidationError(f"Malformed {what} {text!r}; expected comma-separated numbers.")
    return [float(tok) for tok in text.split(",")]


def _is_type(value: Any, expected: JsonType) -> bool:
    # bool is an int subclass; JSON true/false must not pass as numbers
    if isinstance(value, bool):
        return expected is bool or (isinstance(expected, tuple) and bool in expected)
    return isinstance(value, expected)


def _validate_payload(payload: Mapping[str, Any], schema: Mapping[str, Mapping[str, JsonType]],
                      where: str) -> Optional[str]:
    """Error message for the first problem found, or None when the payload fits the schema."""
    required, optional = schema["required"], schema.get("optional", {})
    missing = [f for f in required if payload.get(f) is None]
    if missing:
        return f"{where} is missing required fields {missing}."
    unknown = sorted(set(payload) - set(required) - set(optional))
    if unknown:
        return f"{where} has unknown fields {unknown}."
    for name, expected in {**required, **optional}.items():
        if name in payload and payload[name] is not None and not _is_type(payload[name], expected):
            return f"{where} field '{name}' has the wrong type ({type(payload[name]).__name__})."
    return None


def is_valid_pmf_json(obj: Any) -> bool:
    return (isinstance(obj, dict) and set(obj) <= {"outcomes", "mass", "given"} and "mass" in obj
            and isinstance(obj["mass"], list))


def validate_spec(payload: Any, expected_kinds: Optional[Iterable[str]] = None) -> Dict[str, Any]:
    """Check a parsed game spec; raise ValidationError with a precise message otherwise."""
    if not isinstance(payload, dict):
        raise ValidationError("Spec must be a JSON object.")
    kind = payload.get("kind")
    if kind not in SPEC_SCHEMAS:
        raise ValidationError(f"Spec kind {kind!r} is not one of {sorted(SPEC_SCHEMAS)}.")
    if expected_kinds is not None and kind not in set(expected_kinds):
        raise ValidationError(f"This command expects a spec of kind {sorted(expected_kinds)}, got {kind!r}.")
    error = _validate_payload(payload, SPEC_SCHEMAS[kind], f"{kind} spec")
    if error:
        raise ValidationError(error)
    if payload["version"] != SPEC_VERSION:
        raise ValidationError(f"Unsupported spec version {payload['version']!r}; expected {SPEC_VERSION}.")
    if "oracle" in payload:
        error = _validate_payload(payload["oracle"], {"required": {}, "optional": ORACLE_FIELDS}, "oracle overrides")
        if error:
            raise ValidationError(error)
    for field in ("p0", "p_G", "eta"):
        if field in payload and not is_valid_pmf_json(payload[field]):
            raise ValidationError(f"Field '{field}' must be an object with 'mass' and optional labels.")
    return payload


def validate_report(command: str, report: Mapping[str, Any]) -> Optional[str]:
    schema = REPORT_SCHEMAS.get(command)
    if schema is None:
        return f"No report schema for command {command!r}."
    return _validate_payload(report, schema, f"{command} report")
