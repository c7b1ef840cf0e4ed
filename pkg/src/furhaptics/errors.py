"""Exception taxonomy shared across the package.

Every failure mode raised by the library derives from FurHapticsError so
callers (and the CLI) can catch one base class and still discriminate by
type where it matters.
"""


class FurHapticsError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FurHapticsError, ValueError):
    """Rejected input value (non-finite vector, bad argument range)."""


class DomainError(FurHapticsError, ValueError):
    """Parameters outside the model's mathematical domain (e.g. hand above hair tips)."""


class ContractError(FurHapticsError):
    """Caller violated an operation's stated precondition."""


class ConfigError(FurHapticsError):
    """Invalid configuration (rates, step sizes, toggles)."""


class DegenerateDistanceError(FurHapticsError):
    """Field point coincides with a transducer; distance term is singular."""


class TraceParseError(FurHapticsError):
    """Malformed force-trace or trajectory file.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class TrajectoryError(FurHapticsError):
    """Unusable hand trajectory (empty, non-increasing timestamps)."""


class PeriodicityNotFound(FurHapticsError):
    """No periodic structure detected in a force trace."""


class FitConvergenceError(FurHapticsError):
    """Fit failed to converge. ``best`` holds the best result found so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class OutputError(FurHapticsError):
    """Output path unwritable or output serialization failed."""
