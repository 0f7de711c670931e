"""Exception hierarchy shared by the solvers and the command line."""


class SpikelabError(Exception):
    """Base class for all package errors."""


class ConfigError(SpikelabError, ValueError):
    """Invalid or inconsistent user configuration."""


class AssumptionError(SpikelabError):
    """A structural hypothesis of the model does not hold for the given data."""


class NonConvergenceError(SpikelabError):
    """An iterative solver stopped without meeting its tolerance."""


class GroundStateError(NonConvergenceError):
    """Ground-state iteration diverged or landed on a non-positive state."""


class SingularFactorizationError(SpikelabError):
    """Sparse factorization found a zero or numerically negligible pivot."""


class RegimeError(SpikelabError):
    """The configuration has left the regime the construction is built for."""
