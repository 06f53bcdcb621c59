# lib/errors.py
"""Exception hierarchy shared by the library, the oracles and the CLI.

The CLI maps each family to an exit code (see ``EXIT_CODES``).
"""
from typing import Dict, Type


class RenyiBetError(Exception):
    """Root of every error raised on purpose by this package."""

    kind = "error"


# ---- VALIDATION (exit 2) ----

class ValidationError(RenyiBetError, ValueError):
    kind = "validation"


class DimensionMismatchError(ValidationError):
    kind = "dimension_mismatch"


class ExcludedLimitError(ValidationError):
    kind = "excluded_limit"


class GuardExceededError(ValidationError):
    kind = "guard_exceeded"


class ConfigError(RenyiBetError, RuntimeError):
    kind = "config"


# ---- NUMERIC SINGULARITIES (exit 4) ----

class SingularityError(RenyiBetError, ArithmeticError):
    kind = "singularity"


class SingularPivotError(SingularityError):
    kind = "singular_pivot"


class DegeneratePosteriorError(SingularityError):
    kind = "degenerate_posterior"


class CascadeSingularityError(SingularityError):
    kind = "cascade_singularity"


# ---- PROPERTY VIOLATIONS (exit 3) ----

class PropertyViolationError(RenyiBetError, AssertionError):
    kind = "property_violation"


EXIT_CODES: Dict[Type[RenyiBetError], int] = {
    ValidationError: 2,
    ConfigError: 2,
    PropertyViolationError: 3,
    SingularityError: 4,
}


def exit_code_for(err: BaseException) -> int:
    for cls, code in EXIT_CODES.items():
        if isinstance(err, cls):
            return code
    return 1
