"""Exception types shared across the package."""


class AclabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(AclabError):
    """Invalid configuration, argument, or input file."""


class NumericalError(AclabError):
    """Base class for failures of a numerical procedure."""


class NonConvergenceError(NumericalError):
    """An iteration exhausted its budget without meeting its tolerance."""


class LinearSolveError(NumericalError):
    """A sparse factorization or linear solve failed."""


class InconsistencyError(NumericalError):
    """Two independent routes to the same quantity disagree."""


class GeometryError(AclabError):
    """A requested region does not fit inside the available domain."""


class DegenerateFieldError(AclabError):
    """The field carries no usable signal for the requested analysis."""


class OutOfBasinError(NumericalError):
    """A local solve started outside the basin of its target."""


class StationarityError(NumericalError):
    """A field violates the stationarity identities beyond tolerance."""
