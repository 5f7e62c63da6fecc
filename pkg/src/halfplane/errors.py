"""Exception hierarchy shared by every module."""


class HalfPlaneError(Exception):
    """Base class for all library errors."""


class ParseError(HalfPlaneError, ValueError):
    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of {', '.join(map(repr, self.expected))})" if self.expected else ""
        super().__init__(f"{message} at offset {position}{detail}")


class OutOfRangeParameter(HalfPlaneError, ValueError):
    pass


class DomainError(HalfPlaneError, ValueError):
    """A point (or grid) lies outside the right half-plane."""


class NumericOverflow(HalfPlaneError, ArithmeticError):
    pass


class NotConverged(HalfPlaneError):
    pass


class DegenerateEnvelope(HalfPlaneError):
    pass


class PreconditionFailed(HalfPlaneError, ValueError):
    pass


class DomainExit(HalfPlaneError):
    """The integrated path reached Re u <= margin at time ``s``."""

    def __init__(self, s, u):
        self.s = s
        self.u = u
        super().__init__(f"trajectory left the half-plane near s={s!r}, u={u!r}")


class StepLimitExceeded(HalfPlaneError):
    pass


class QuadratureFailure(HalfPlaneError):
    pass


class NewtonDiverged(HalfPlaneError):
    pass


class NonConvergent(HalfPlaneError):
    pass


class TailTooFat(HalfPlaneError):
    pass


class BranchAmbiguity(HalfPlaneError):
    def __init__(self, points):
        self.points = list(points)
        super().__init__(f"principal branch ambiguous at {len(self.points)} grid point(s)")
