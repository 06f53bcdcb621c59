# outputs/report_writer.py
import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from lib.errors import PropertyViolationError, ValidationError
from lib.log import get_logger
from utils.validation import validate_report

log = get_logger(__name__)

SIGNIFICANT_DIGITS = 12

# Report keys holding log-scale quantities (nats); --bits divides exactly these by ln 2.
LOG_KEYS = frozenset({
    "divergence", "before", "after", "unconditional", "log_ice", "divergence_term",
    "divergence_default_pivot", "penalty", "fairness_terms", "recomposed", "slack",
    "optimal_log_ice", "max_log_ice", "gain", "conditional_optimum", "unconditional_optimum",
    "monotone", "postprocessed", "log_advantage", "closed_form", "brute_force", "gap",
    "kl_limit", "tropical_limit", "contribution", "fairness_term",
})


def format_float(x: float) -> float:
    if not math.isfinite(x):
        return x
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}")


def rounded(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, Mapping):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return rounded(obj.item())
    return obj


def _scale(value: Any, factor: float) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return value * factor
    if isinstance(value, list):
        return [_scale(v, factor) for v in value]
    return value


def to_bits(obj: Any) -> Any:
    """Rescale every log-quantity by 1/ln 2; probabilities, ratios and wealth stay put."""
    if isinstance(obj, Mapping):
        out = {}
        for key, value in obj.items():
            if key in LOG_KEYS:
                out[key] = _scale(value, 1.0 / math.log(2.0))
            else:
                out[key] = to_bits(value)
        return out
    if isinstance(obj, list):
        return [to_bits(v) for v in obj]
    return obj


class ReportWriter:
    """Writes one report per command to stdout or to ``--out``."""

    def __init__(self, out: Optional[Path] = None, fmt: str = "json", bits: bool = False) -> None:
        if fmt not in ("json", "csv"):
            raise ValidationError(f"Unknown output format {fmt!r}; use json or csv.")
        self.out = out
        self.fmt = fmt
        self.bits = bits

    def _emit(self, text: str) -> None:
        if self.out is None:
            print(text)
        else:
            self.out.parent.mkdir(parents=True, exist_ok=True)
            self.out.write_text(text + "\n", encoding="utf-8")
            log.info("wrote %s", self.out)

    def prepare(self, command: str, report: Dict[str, Any]) -> Dict[str, Any]:
        error = validate_report(command, report)
        if error:
            raise PropertyViolationError(f"Internal report does not fit its schema: {error}")
        if self.bits:
            report = {**to_bits(report), "unit": "bits"}
        return rounded(report)

    def write(self, command: str, report: Dict[str, Any], rows: Optional[Sequence[Mapping[str, Any]]] = None) -> None:
        """
        Emit ``report`` as JSON, or ``rows`` as CSV when the csv format is selected.
        :param rows: flat records for the csv format; defaults to the report itself as one row.
        """
        report = self.prepare(command, report)
        if self.fmt == "json":
            self._emit(json.dumps(report, indent=2, ensure_ascii=False))
            return
        if rows is None:
            self.write_csv([{k: v for k, v in report.items() if not isinstance(v, (dict, list))}])
        else:
            self.write_table(rows)

    def write_table(self, rows: Iterable[Mapping[str, Any]], header: Optional[List[str]] = None) -> None:
        """CSV of raw records; log-quantity columns are rescaled under --bits."""
        rows = [dict(r) for r in rows]
        if self.bits:
            rows = [to_bits(r) for r in rows]
        self.write_csv(rows, header)

    def write_csv(self, rows: Iterable[Mapping[str, Any]], header: Optional[List[str]] = None) -> None:
        rows = list(rows)
        header = header or (list(rows[0].keys()) if rows else [])
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: rounded(row.get(k)) for k in header})
        self._emit(buffer.getvalue().rstrip("\n"))
