"""Exception hierarchy shared by the engine and the command line."""

from __future__ import annotations

from typing import Any

import config


class SubcashError(Exception):
    exit_code = config.EXIT_CODES["validation"]


class ValidationError(SubcashError, ValueError):
    """Inputs violate a type invariant (lengths, sums, bounds)."""

    exit_code = config.EXIT_CODES["validation"]


class ResolutionError(ValidationError):
    """A named reference in a scenario document does not resolve."""


class DivisionGuardError(ValidationError):
    """A discount factor is too close to zero to divide by."""


class StepSizeError(ValidationError):
    """The implicit lattice step is not a contraction (C * dt >= 1)."""


class ParseError(SubcashError):
    exit_code = config.EXIT_CODES["parse"]

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class CapacityError(SubcashError):
    exit_code = config.EXIT_CODES["capacity"]


class NumericError(SubcashError):
    """An iterative solver failed; `best_iterate` holds the last usable point."""

    exit_code = config.EXIT_CODES["numeric"]

    def __init__(self, message: str, best_iterate: Any = None, best_value: float | None = None):
        self.best_iterate = best_iterate
        self.best_value = best_value
        super().__init__(message)


class UnboundedProblemError(NumericError):
    """The inf-convolution objective keeps decreasing: R_{A,B}(0) > -inf fails."""
