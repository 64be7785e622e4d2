"""
Exception hierarchy.  Every error raised on purpose by this package derives from `ToricQuenchError`, and carries the
offending values as attributes so that callers (most importantly the command line runner) can report them precisely.
"""
from typing import Any
from typing import Optional

__all__ = [
    "ToricQuenchError",
    "InvalidChainError",
    "DimensionMismatchError",
    "NumericalInconsistencyError",
    "IntegrationError",
    "OracleSizeError",
    "FitError",
    "ConfigError",
    "DomainError",
]


class ToricQuenchError(Exception):
    """Base class for all errors raised by this package"""


class InvalidChainError(ToricQuenchError, ValueError):
    def __init__(self, field_name: str, value: Any, reason: str) -> None:
        super().__init__(field_name, value, reason)
        self.field_name = field_name
        self.value = value
        self.reason = reason

    def __str__(self) -> str:
        return f"invalid chain parameter '{self.field_name}' = {self.value!r}: {self.reason}"


class DimensionMismatchError(ToricQuenchError, ValueError):
    def __init__(self, what: str, expected: int, got: int) -> None:
        super().__init__(what, expected, got)
        self.what = what
        self.expected = expected
        self.got = got

    def __str__(self) -> str:
        return f"{self.what}: expected dimension {self.expected}, got {self.got}"


class NumericalInconsistencyError(ToricQuenchError, ArithmeticError):
    """A quantity that must be bounded by construction came out of bounds by more than round-off"""

    def __init__(self, quantity: str, value: float, bound: float, context: Optional[str] = None) -> None:
        super().__init__(quantity, value, bound, context)
        self.quantity = quantity
        self.value = value
        self.bound = bound
        self.context = context

    def __str__(self) -> str:
        where = f" ({self.context})" if self.context else ""
        return f"{self.quantity} = {self.value:.3e} violates bound {self.bound:.3e}{where}"


class IntegrationError(ToricQuenchError, ArithmeticError):
    def __init__(self, integrand: str, message: str, abserr: float) -> None:
        super().__init__(integrand, message, abserr)
        self.integrand = integrand
        self.message = message
        self.abserr = abserr

    def __str__(self) -> str:
        return f"quadrature of {self.integrand} did not converge (abserr={self.abserr:.3e}): {self.message}"


class OracleSizeError(ToricQuenchError, ValueError):
    def __init__(self, n_sites: int, limit: int, operation: str) -> None:
        super().__init__(n_sites, limit, operation)
        self.n_sites = n_sites
        self.limit = limit
        self.operation = operation

    def __str__(self) -> str:
        return f"{self.operation} supports at most {self.limit} sites, got {self.n_sites}"


class FitError(ToricQuenchError, ValueError):
    def __init__(self, reason: str, n_samples: int) -> None:
        super().__init__(reason, n_samples)
        self.reason = reason
        self.n_samples = n_samples

    def __str__(self) -> str:
        return f"cannot fit decay to {self.n_samples} samples: {self.reason}"


class ConfigError(ToricQuenchError, ValueError):
    def __init__(self, key: str, reason: str, source: Optional[str] = None, line_no: Optional[int] = None) -> None:
        super().__init__(key, reason, source, line_no)
        self.key = key
        self.reason = reason
        self.source = source
        self.line_no = line_no

    def __str__(self) -> str:
        location = ""
        if self.source is not None:
            location = f" ({self.source}" + (f", line {self.line_no}" if self.line_no is not None else "") + ")"
        return f"config key '{self.key}'{location}: {self.reason}"


class DomainError(ToricQuenchError, ValueError):
    """An argument outside the domain where a formula is defined"""

    def __init__(self, quantity: str, value: Any, reason: str) -> None:
        super().__init__(quantity, value, reason)
        self.quantity = quantity
        self.value = value
        self.reason = reason

    def __str__(self) -> str:
        return f"{self.quantity} = {self.value!r} is out of domain: {self.reason}"
