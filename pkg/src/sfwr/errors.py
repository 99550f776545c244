"""Exception types shared across the toolkit."""


class SfwrError(Exception):
    """Base class for all toolkit errors."""


class SingularReflectorError(SfwrError):
    """Reflector impedance makes the reflection coefficient undefined."""


class InfeasiblePlanError(SfwrError):
    """Requested diagnostic range cannot be met by a valid burst plan."""


class SegmentationError(SfwrError):
    """Acquisition record does not match the plan layout."""


class PaddingInsufficientError(SfwrError):
    """Circular wrap-around energy in the simulated channel is too large."""


class NoReflectionError(SfwrError):
    """Reflected sequence is indistinguishable from zero (matched line)."""


class SineFitError(SfwrError):
    """Sine fit is degenerate (zero signal or ill-conditioned window)."""


class FaultSolveError(SfwrError):
    """Fault location system is singular or its inputs are invalid."""
