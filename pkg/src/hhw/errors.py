"""Exception types shared across the toolkit."""

from __future__ import annotations

import numpy as np


class HHWError(Exception):
    """Base class for all toolkit errors."""


class DomainError(HHWError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(HHWError, ArithmeticError):
    """A series/iteration did not meet its truncation criterion.

    Callers can retry with a larger ``max_terms`` or switch to the
    asymptotic branch.
    """


class ConfigError(HHWError, ValueError):
    """A configuration file failed to parse or validate.

    ``field`` names the offending entry (dotted path), so CLI error
    messages can point the user at the exact key.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{message} (field: {field!r})"
        super().__init__(message)


class HypothesisViolationError(HHWError, ValueError):
    """Model parameters violate a precondition of a bound or threshold."""


class BlowUpError(HHWError, RuntimeError):
    """A trajectory left the finite range; usually a sign of bad parameters
    or an unstable step size.

    Carries the last finite time/state and the partial trajectory recorded
    up to the failure.
    """

    def __init__(self, t: float, state: np.ndarray, partial=None):
        self.t = t
        self.state = state
        self.partial = partial
        super().__init__(
            f"non-finite state detected at t={t:.6g}; last finite state attached"
        )


class StepSizeUnderflowError(HHWError, RuntimeError):
    """The adaptive controller pushed the step below the representable floor."""


class MemoryBudgetError(HHWError, RuntimeError):
    """The fractional-history buffer would exceed the configured limit."""


class TrajectoryTooShortError(HHWError, ValueError):
    """A trajectory is too short for the requested tail/limsup analysis."""
