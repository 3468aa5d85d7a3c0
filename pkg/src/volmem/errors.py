"""Shared exception types."""


class VolmemError(Exception):
    """Base class for package errors."""


class SchemaError(VolmemError):
    """Input file does not match the documented format."""


class DataError(VolmemError):
    """Input data violates an operation precondition."""


class EstimationError(VolmemError):
    """Estimation failed in a way that invalidates results."""


class SingularHessianError(EstimationError):
    """Numerically singular Hessian.

    Carries the estimated condition number so the caller can see how close
    to singular the problem was.
    """

    def __init__(self, cond: float):
        self.cond = float(cond)
        super().__init__(
            f"Hessian is numerically singular (condition number {cond:.3e}); "
            "standard errors are not available"
        )
