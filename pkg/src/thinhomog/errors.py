"""Exception types shared across the toolkit.

The CLI maps :class:`ConfigError` subclasses to exit code 3 and
:class:`SolverError` subclasses to exit code 2.
"""


class ConfigError(ValueError):
    """Invalid user input: profiles, geometry, parameters or config files."""


class ProfileError(ConfigError):
    pass


class GeometryError(ConfigError):
    pass


class StripOverflowError(GeometryError):
    """The concentration strip does not fit inside the domain (eps*h1 >= g0)."""


class SolverError(RuntimeError):
    """Base class for iterative solver failures."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = list(history) if history is not None else []


class NonConvergenceError(SolverError):
    pass


class BreakdownError(SolverError):
    pass


class IndefiniteError(BreakdownError):
    """CG met a direction with non-positive curvature."""


class FactorizationError(SolverError):
    pass


class StagnationError(SolverError):
    """Newton line search could not reduce the residual."""


class CompatibilityError(SolverError):
    """Pure Neumann right-hand side does not integrate to zero."""
