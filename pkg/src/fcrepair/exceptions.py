"""Exception hierarchy shared by all modules."""


class FcRepairError(Exception):
    """Base class for errors raised by fcrepair."""


class ParseError(FcRepairError, ValueError):
    """Malformed input file.  ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PreconditionError(FcRepairError, ValueError):
    """Input is well-formed but violates an operation's precondition."""


class ResourceError(FcRepairError, RuntimeError):
    """A configured resource bound was hit."""


class StateExplosionError(ResourceError):
    def __init__(self, message, bound=None):
        if bound is not None:
            message = f"{message} (bound={bound})"
        super().__init__(message)
        self.bound = bound


class UnboundedNetError(StateExplosionError):
    """A reachable marking strictly covers one of its ancestors."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class BudgetExhausted(ResourceError):
    """ESSP search ran out of expansion budget before finding any region."""

    def __init__(self, message, budget=None):
        super().__init__(message)
        self.budget = budget


class ConvergenceError(ResourceError):
    pass


class SimulationError(ResourceError):
    pass


class TransitionNotEnabled(FcRepairError, ValueError):
    pass
