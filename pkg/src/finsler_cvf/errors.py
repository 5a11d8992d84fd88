"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`FinslerCVFError`; most also derive from ``ValueError`` so callers
that only care about bad input can catch that.
"""


class FinslerCVFError(Exception):
    pass


class DomainViolation(FinslerCVFError, ValueError):
    """A point lies outside the chart or an interval of definition."""


class SingularMetric(FinslerCVFError, ValueError):
    """Coefficient matrix is not (numerically) positive definite / invertible."""


class NotPositiveDefinite(FinslerCVFError, ValueError):
    """A deformed metric fails ``u > 0`` or ``u + v b^2 > 0``."""


class DegeneratePlane(FinslerCVFError, ValueError):
    pass


class InvalidFamilyParams(FinslerCVFError, ValueError):
    pass


class ODESingularity(FinslerCVFError, ValueError):
    """Leading coefficient of an ODE vanishes inside the requested interval."""


class SingularODE(ODESingularity):
    """Denominator of the f-equation has a root in range; ``roots`` lists them."""

    def __init__(self, message, roots=()):
        super().__init__(message)
        self.roots = tuple(roots)


class NoFixedPoint(FinslerCVFError, ValueError):
    pass


class AmbiguousFixedPoint(UserWarning):
    """Several admissible b^2 values invert the deformation; the smallest is used."""


class CaseMismatch(FinslerCVFError, ValueError):
    pass


class PreconditionViolation(FinslerCVFError, ValueError):
    pass


class ConstraintViolation(FinslerCVFError, ValueError):
    pass


class NotClosed(FinslerCVFError, ValueError):
    pass


class EmptyRegularRegion(FinslerCVFError, ValueError):
    pass


class DomainEscape(FinslerCVFError, RuntimeError):
    """A flow line left the chart domain before the requested time."""


class ConfigError(FinslerCVFError, ValueError):
    """Malformed or incomplete scenario file."""
