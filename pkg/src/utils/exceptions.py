"""
Custom Exceptions
Define specific exceptions for better error handling in the simulation engine.
"""

from typing import Any, List, Optional


class RaftSimException(Exception):
    """Base exception for the raft simulation engine."""
    pass


class ConfigurationException(RaftSimException):
    """Raised when a run configuration is invalid or missing."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        self.errors = errors or []
        super().__init__(message)


class GeometryMismatchException(RaftSimException):
    """Raised when fields or arrays do not belong to the same grid."""
    pass


class SingularSystemException(RaftSimException):
    """Raised when a linear solve hits the zero eigenvalue with a non mean-free right-hand side."""

    def __init__(self, mean_value: float):
        self.mean_value = mean_value
        super().__init__(f"Singular system: right-hand side has mean {mean_value:.3e}, expected 0")


class NumericalFailureException(RaftSimException):
    """Raised when time integration produces non-finite values."""

    def __init__(self, message: str, last_state: Any = None, step: Optional[int] = None):
        self.last_state = last_state
        self.step = step
        super().__init__(message)


class StepSizeException(NumericalFailureException):
    """Raised when an explicit step size exceeds the stability bound of the stiff operator."""

    def __init__(self, dt: float, dt_max: float):
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(f"Step size {dt:.3e} exceeds explicit stability bound {dt_max:.3e}")


class NonConvergenceException(RaftSimException):
    """Raised when an iterative solver hits its iteration cap."""

    def __init__(self, solver: str, iterations: int, residual: float,
                 history: Optional[List[float]] = None):
        self.solver = solver
        self.iterations = iterations
        self.residual = residual
        self.history = history or []
        super().__init__(
            f"{solver} did not converge after {iterations} iterations (residual {residual:.3e})"
        )


class ConditionViolatedException(RaftSimException):
    """Raised when the mean-value equations have no admissible root for a law/config."""
    pass


class UnsupportedLawException(RaftSimException):
    """Raised when an operation requires a specific exchange law variant."""

    def __init__(self, operation: str, kind: str):
        self.operation = operation
        self.kind = kind
        super().__init__(f"{operation} does not support exchange law '{kind}'")


class SnapshotFormatException(RaftSimException):
    """Raised when a snapshot file cannot be parsed."""
    pass
