"""
Exception hierarchy for the deautoconvolution library.

Every error carries the process exit code the CLI reports for it and a short
machine-readable error code used in JSON reports.
"""
from enum import IntEnum
from typing import Any, Dict, Optional


class ExitCode(IntEnum):
    OK = 0
    RUN_FAILURE = 1
    PARSE_FAILURE = 3
    INFEASIBLE = 4
    NON_FINITE_DIVERGENCE = 5
    INVARIANT_VIOLATION = 6
    INVALID_PARAMETERS = 7


EXIT_CODE_TABLE = "\n".join(
    [
        "Exit codes:",
        "  0  success",
        "  1  run failure (no restart completed)",
        "  3  input file could not be parsed",
        "  4  infeasible or degenerate solver state",
        "  5  divergence is infinite at the initial point",
        "  6  invariant violated in validation mode",
        "  7  invalid parameters",
    ]
)


class DeautoconvError(Exception):
    """Base class for all library errors."""

    exit_code: ExitCode = ExitCode.RUN_FAILURE
    error_code: str = "run_failure"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        self.iteration: Optional[int] = None
        super().__init__(message)

    def at_iteration(self, t: int) -> "DeautoconvError":
        """Annotate the error with the iteration index it surfaced in."""
        self.iteration = t
        return self

    def __str__(self) -> str:
        if self.iteration is None:
            return self.message
        return f"iteration {self.iteration}: {self.message}"


class InputParseError(DeautoconvError):
    exit_code = ExitCode.PARSE_FAILURE
    error_code = "parse_failure"


class InvalidSignalError(DeautoconvError, ValueError):
    exit_code = ExitCode.INVALID_PARAMETERS
    error_code = "invalid_signal"


class LengthMismatchError(DeautoconvError, ValueError):
    exit_code = ExitCode.INVALID_PARAMETERS
    error_code = "length_mismatch"

    def __init__(self, left: int, right: int):
        super().__init__(
            f"length mismatch: {left} != {right}",
            details={"left": left, "right": right},
        )


class InfeasibleInputError(DeautoconvError):
    exit_code = ExitCode.INFEASIBLE
    error_code = "infeasible"


class DegenerateDenominatorError(DeautoconvError):
    exit_code = ExitCode.INFEASIBLE
    error_code = "degenerate_denominator"

    def __init__(self, index: int, value: float, where: str):
        self.index = index
        super().__init__(
            f"degenerate denominator {value!r} in {where} at index {index}",
            details={"index": index, "value": value, "where": where},
        )


class NonFiniteDivergenceError(DeautoconvError):
    exit_code = ExitCode.NON_FINITE_DIVERGENCE
    error_code = "non_finite_divergence"


class InvariantViolation(DeautoconvError):
    exit_code = ExitCode.INVARIANT_VIOLATION
    error_code = "invariant_violation"
