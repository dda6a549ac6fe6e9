"""Exception hierarchy shared by all modules."""


class InvkitError(Exception):
    """Base class for every error raised by invkit."""


class DimensionMismatch(InvkitError, ValueError):
    pass


class EmptyPolyhedron(InvkitError):
    """An H-representation describes the empty set."""


class UnboundedNonCone(InvkitError):
    """Vertices were requested for an unbounded polyhedron that is not a cone."""


class OriginNotContained(InvkitError):
    pass


class ComplexityBudgetExceeded(InvkitError):
    """Fourier-Motzkin produced more intermediate rows than allowed."""


class OverlappingPieces(InvkitError):
    pass


class NotCovering(InvkitError):
    pass


class NoPieceContains(InvkitError):
    pass


class SolverError(InvkitError):
    """Raised by :func:`invkit.synth.solve` when the backend does not return a solution."""

    def __init__(self, status, message=""):
        super().__init__(message or status)
        self.status = status


class Infeasible(SolverError):
    def __init__(self, message=""):
        super().__init__("infeasible", message)


class Unbounded(SolverError):
    def __init__(self, message=""):
        super().__init__("unbounded", message)


class NumericalFailure(SolverError):
    def __init__(self, message=""):
        super().__init__("numerical_failure", message)
