"""Exception types raised across the package."""


class PllError(Exception):
    """Base class for every error raised by cdrpll."""


class InvalidInputError(PllError, ValueError):
    """A value violates a documented precondition or type invariant."""


class PoleEvaluationError(PllError, ArithmeticError):
    """A transfer function was evaluated at (or numerically on top of) a pole."""


class DiscretizationError(PllError):
    """The discrete filter produced from a stable prototype is not stable."""


class ConfigError(PllError):
    """A configuration file or simulation configuration is unusable.

    ``key`` and ``line`` locate the offending entry when known.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        prefix = ": ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SimulationDiverged(PllError):
    """The phase accumulator left the finite, guarded range."""


class SimulationCancelled(PllError):
    """The cancellation callback asked the engine to stop."""
