class BeamFoundationError(Exception):
    """
    Base class of every error raised by the library.
    """


class DomainError(BeamFoundationError, ValueError):
    """
    An argument lies outside the domain where the requested quantity is defined.
    """


class SingularityError(DomainError):
    """
    The requested derivative is singular at the given point (f' at t = 1).
    """


class NondifferentiablePointError(DomainError):
    """
    psi_L is not differentiable at the given point (g_L(kappa) is a multiple of 2*pi).
    """


class ConvergenceError(BeamFoundationError, ArithmeticError):
    """
    An iterative method ran out of its iteration budget.

    Attributes:
        iterations (int): Number of iterations performed before giving up.
        diagnostics (dict): Free-form information about the last iterate.
    """

    def __init__(self, message: str, iterations: int = 0, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.diagnostics = diagnostics or {}


class EigensolverError(ConvergenceError):
    """
    The symmetric eigensolver failed or its residuals exceed the tolerance.
    """


class MaxIterationsError(ConvergenceError):
    """
    The fixed-point iteration did not reach the tolerance within max_iter steps.
    """


class NonContractionError(BeamFoundationError, ValueError):
    """
    The estimated contraction factor of the fixed-point map is not below 1.
    """

    def __init__(self, message: str, rho: float) -> None:
        super().__init__(message)
        self.rho = rho


class GridMismatchError(BeamFoundationError, ValueError):
    """
    Samples and quadrature grid do not belong together.
    """


class GridTooCoarseError(BeamFoundationError, ValueError):
    """
    Not enough interior points for the five-point fourth difference.
    """


class UnsupportedRuleError(BeamFoundationError, ValueError):
    """
    Unknown quadrature rule identifier, or a rule that cannot use the requested node count.
    """


class InsufficientEigenvaluesError(BeamFoundationError, ValueError):
    """
    The requested decay window is degenerate or reaches past the reliable eigenvalues.
    """


class ReportWriteError(BeamFoundationError, OSError):
    """
    A report or profile file could not be written or moved into place.
    """
