"""Exception hierarchy.

Errors split into two families so the command line can map them onto exit
codes: :class:`ValidationError` for bad input (exit 2) and
:class:`NumericalError` for computations that could not be completed
(exit 3).
"""


class SpinelabError(Exception):
    """Base class for all package errors."""


class ValidationError(SpinelabError, ValueError):
    """Input that violates a documented precondition."""


class NumericalError(SpinelabError, ArithmeticError):
    """A computation that failed to reach its tolerance or budget."""


class TrivialClass(ValidationError):
    """A word that reduces to the identity of the surface group."""


class NonHyperbolicGenerator(NumericalError):
    """A generator matrix with trace of absolute value at most 2."""


class EllipticOrParabolic(NumericalError):
    """A holonomy matrix that is not hyperbolic."""


class SearchBudgetExceeded(NumericalError):
    """Group enumeration grew beyond its budget; partial results are invalid."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DegenerateCrossing(NumericalError):
    """Two axes cross at an angle below tolerance."""


class DegenerateArrangement(NumericalError):
    """Three or more axes pass through one point within tolerance."""


class NotFilling(ValidationError):
    """A curve system whose complement is not a union of disks."""


class SizeLimit(ValidationError):
    """Input exceeds a brute-force enumeration bound."""


class StepUnderflow(NumericalError):
    """Richardson extrapolation of a difference quotient did not settle."""


class LPNumerics(NumericalError):
    """A linear-programming certificate failed its residual check."""


class Diverged(NumericalError):
    """An optimizer iterate approached the boundary of Teichmüller space."""


class AmbiguousSystoleSet(NumericalError):
    """Curves sit too close to the systole value to decide membership."""


class RankDeficient(NumericalError):
    """Constraint gradients became linearly dependent."""


class NoConvergence(NumericalError):
    """An iterative solver hit its iteration cap."""


class InHull(ValidationError):
    """A direction lies inside the convex hull it was tested against."""


class DegenerateTolerance(NumericalError):
    """Points coincide to within the polytope tolerance."""


class ProbeInconclusive(NumericalError):
    """Every probe of a folded facet failed to converge."""


class StepFailure(NumericalError):
    """An adaptive integrator step size fell below its floor."""


class PreconditionFailed(ValidationError):
    """A flow was launched from a point that violates its precondition."""


class StalledFlow(NumericalError):
    """A flow stopped making progress while its goal remained unmet."""
