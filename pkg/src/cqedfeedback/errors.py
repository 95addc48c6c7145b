"""Exception hierarchy shared by every module of the package."""


class CQEDError(Exception):
    """Base class for all errors raised by :mod:`cqedfeedback`."""


class ParameterRangeError(CQEDError, ValueError):
    """Invalid or non-finite system parameters."""


class DomainError(CQEDError, ValueError):
    """Argument outside the domain of an operation (e.g. ``kappa_in <= 0``)."""


class PoleProximityError(CQEDError, ArithmeticError):
    """Evaluation point lies (numerically) on a pole of a transfer coefficient."""


class QuadratureError(CQEDError, ArithmeticError):
    """Adaptive quadrature did not converge within its evaluation budget.

    The best available estimate is kept on the exception so callers can
    decide whether it is good enough.
    """

    def __init__(self, message, value=float("nan"), error_estimate=float("inf"), evaluations=0):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
        self.evaluations = evaluations


class OracleUnavailableError(CQEDError):
    """The residue oracle refuses an integrand (too many poles)."""


class DegenerateSpectrumError(CQEDError, ArithmeticError):
    """A spectral function with zero norm cannot be normalized."""


class ConsistencyError(CQEDError, ArithmeticError):
    """Two independent routes to the same quantity disagree."""


class SearchError(CQEDError, RuntimeError):
    """No bracketable maximum was found during a quasi-mode search."""
