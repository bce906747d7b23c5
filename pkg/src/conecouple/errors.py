"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates an operation's preconditions or a type invariant."""


class CapacityError(ValueError):
    """A request exceeds a hard size limit (e.g. exact solver state space)."""


class EstimationError(RuntimeError):
    """A Monte Carlo estimate could not be formed (e.g. no surviving runs)."""
