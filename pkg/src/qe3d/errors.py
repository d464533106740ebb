"""Exception types shared across the package."""


class QEError(Exception):
    """Base class for every error raised by qe3d."""


class DomainError(QEError, ValueError):
    """A point, stencil or argument lies outside the domain of definition."""


class DegenerateMetricError(QEError, ValueError):
    """A metric component is not strictly positive where it is evaluated."""


class CapabilityError(QEError):
    """The requested computation needs data or dimensions that are unavailable."""


class InvalidSpaceError(QEError, ValueError):
    """A QE space violates its invariants (for instance w <= 0 on the grid)."""


class FrameUndefinedError(QEError, ValueError):
    """Shape coefficients need |grad w| > 0."""


class SingularProfileError(QEError):
    """Integration of a profile left the admissible band immediately."""

    def __init__(self, message, reason):
        super().__init__(message)
        self.reason = reason


class NotAxisClosableError(QEError):
    """The profile derivative has no isolated unique root."""


class ConeSingularError(QEError):
    """The second derivative at the axis is not positive."""


class WitnessFailure(QEError):
    """Numerical evidence contradicts a completeness statement."""

    def __init__(self, message, lemma):
        super().__init__(message)
        self.lemma = lemma


class InconsistentBuildError(QEError, ValueError):
    """Profiles do not sit on the declared first-integral levels."""


class InvalidProfileError(QEError, ValueError):
    """Profiles do not satisfy the ODE system they are declared to solve."""


class FiberMismatchError(QEError, ValueError):
    """The requested Einstein fiber model cannot realize the fiber constant."""
