"""Exception types shared across the package."""

from __future__ import annotations


class QflqError(Exception):
    """Base class for all package errors."""


class StructuralError(QflqError, ValueError):
    """Operands have mismatched dimension, number of frequencies or frequencies."""


class ContractError(QflqError, ValueError):
    """An input violates a documented precondition (Hermiticity, zero average, ...)."""


class OrderRangeError(QflqError, IndexError):
    """A requested order, index or table entry is out of range."""


class ResonanceError(QflqError, ArithmeticError):
    """A small divisor n.omega was hit. ``report`` lists the offending harmonics."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class AccuracyError(QflqError, RuntimeError):
    """The fixed-step integrator failed its step-halving self check."""

    def __init__(self, message: str, deviation: float):
        self.deviation = deviation
        super().__init__(message)
