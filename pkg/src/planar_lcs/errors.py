"""Exception types shared across the package."""


class PlanarLcsError(Exception):
    """Base class for all package errors."""


class ComplexEigenvalues(PlanarLcsError):
    """The matrix has a conjugate pair of complex eigenvalues; out of scope."""


class NotStable(PlanarLcsError):
    """An eigenvalue is nonnegative where strict stability is required."""


class LarcViolated(PlanarLcsError):
    """The control direction is (numerically) an eigenvector of the drift matrix."""


class SingularMatrix(PlanarLcsError):
    """The drift matrix is singular where an inverse is required."""


class InvalidSchedule(PlanarLcsError):
    """A schedule segment has a control outside the range or a negative duration."""


class WrongCase(PlanarLcsError):
    """Operation invoked on a system whose classification does not support it."""


class WrongVariant(PlanarLcsError):
    """Operation invoked on a control-set variant that does not support it."""


class TargetOutsideControlSet(PlanarLcsError):
    """Requested endpoint lies outside the control set; transfer impossible."""


class PointOutside(PlanarLcsError):
    """A point required to be inside the control set interior is not."""


class TargetNotInInterior(PlanarLcsError):
    """Steering target is not strictly inside the control set interior."""


class NoSteeringPossible(PlanarLcsError):
    """The system admits no control set containing both endpoints."""


class NoProbeAvailable(PlanarLcsError):
    """No interior probe point exists for oracle cross-validation."""
