"""
Exceptions raised on purpose by the toolkit.

NumericError and its subclasses map to exit code 1 in the command line front
end, DomainError and its subclasses map to exit code 2.
"""
from __future__ import annotations


class PhaseQuantError(Exception):
    pass


class NumericError(PhaseQuantError, ArithmeticError):
    pass


class QuadratureError(NumericError):
    """Panel subdivision cap reached before the tolerance was met."""

    def __init__(self, lower: float, upper: float, residual: float) -> None:
        super().__init__(
            f"quadrature on [{lower:.6g}, {upper:.6g}] did not converge, "
            f"residual estimate {residual:.3e}"
        )
        self.lower = lower
        self.upper = upper
        self.residual = residual


class ConvergenceError(NumericError):
    pass


class DomainError(PhaseQuantError, ValueError):
    pass


class UndefinedPhaseError(DomainError):

    def __init__(self) -> None:
        super().__init__("undefined phase: z = 0 has no argument")


class UnattainableRateError(DomainError):

    def __init__(self, rate: float, bits: int) -> None:
        super().__init__(f"unattainable rate: R = {rate} bits needs R < b = {bits}")
        self.rate = rate
        self.bits = bits


class InsufficientDataError(DomainError):
    pass
