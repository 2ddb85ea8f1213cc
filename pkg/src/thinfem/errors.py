"""Exceptions shared across the solver stack."""

from __future__ import annotations


class SolverError(RuntimeError):
    """A sparse solve failed or missed its residual contract."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class NonConvergenceError(RuntimeError):
    """An iterative loop hit its iteration cap before meeting tolerance."""

    def __init__(self, message: str, iterations: int, residual: float, last=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.last = last


class InfeasibleError(ValueError):
    """The constrained projection problem has an empty feasible set."""
