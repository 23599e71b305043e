"""Exception hierarchy.

Two branches matter to callers: configuration/usage problems
(:class:`ValidationError`, CLI exit code 2) and runtime computation
problems (:class:`ComputationError`, CLI exit code 3).
"""


class ErgostatError(Exception):
    """Base class for all package errors."""


class ValidationError(ErgostatError):
    """Invalid parameters, malformed configuration, or unusable inputs."""


class UnsupportedOperationError(ValidationError):
    """Operation not defined for this system kind (e.g. inverse branches of a rotation)."""


class DegenerateBallError(ValidationError):
    """Target ball has (numerically) zero invariant measure."""


class ComputationError(ErgostatError):
    """A computation could not be carried to completion."""


class NumericalError(ComputationError):
    """Root finding or floating-point evaluation failed to converge."""


class CapacityError(ComputationError):
    """Problem size exceeds a documented hard limit of an exact algorithm."""


class InsufficientDataError(ComputationError):
    """A Monte Carlo estimate has too few effective samples to be reported."""


class HorizonTooDeepError(ComputationError):
    """Interval-image iteration exceeded the component cap before the horizon."""
