"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: precondition/domain -> 2,
resource -> 3, invariant -> 4.
"""


class CubevarError(Exception):
    """Base class for library errors."""


class DomainError(CubevarError, ValueError):
    """Argument outside the mathematical domain (non-finite time, |rho| > kappa^2, ...)."""


class PreconditionError(CubevarError, ValueError):
    """Caller violated an operation precondition."""


class ResourceError(CubevarError, RuntimeError):
    """Requested accuracy or size exceeds what can be computed."""


class InvariantError(CubevarError, AssertionError):
    """Internal consistency check failed."""
