"""Exception types shared across the package.

Runs distinguish four terminal outcomes: success, bad configuration,
trajectory divergence, and synthesis infeasibility.  The command line maps
these to exit codes 0 / 2 / 3 / 4 so batch sweeps can triage results without
parsing logs.
"""


class CarlearnError(Exception):
    """Base class for package errors."""


class InvalidArgumentError(CarlearnError, ValueError):
    """A caller-supplied argument violates a documented precondition."""


class ConfigError(CarlearnError, ValueError):
    """An experiment configuration failed validation (exit code 2)."""


class DivergedError(CarlearnError, RuntimeError):
    """State norm exceeded the divergence guard during integration.

    Attributes:
        t_last: last time with a finite state.
        trajectory: partial trajectory up to t_last, when available.
    """

    def __init__(self, message, t_last=None, trajectory=None):
        super().__init__(message)
        self.t_last = t_last
        self.trajectory = trajectory


class IllConditionedError(CarlearnError, RuntimeError):
    """Data matrix condition number above the usable threshold.

    Attributes:
        cond: the offending condition number.
    """

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class InfeasibleError(CarlearnError, RuntimeError):
    """A synthesis loop failed to converge to a usable gain (exit code 4)."""


class StructuredInfeasibleError(InfeasibleError):
    """Structured synthesis stalled without shrinking the mask residual."""


class SparseInfeasibleError(InfeasibleError):
    """Sparsity-promoting synthesis failed to converge.

    Attributes:
        gamma: the sparsity weight at which the failure occurred.
    """

    def __init__(self, message, gamma=None):
        super().__init__(message)
        self.gamma = gamma


class NotConvergedError(CarlearnError, RuntimeError):
    """An iteration hit its bound without meeting its tolerance."""
