"""
Coverage engine exceptions
"""
from typing import List, Optional


class CoverageError(Exception):
    """Base class for every error raised by the coverage engine"""


class ConfigError(CoverageError):
    """Invalid configuration document or parameter map"""

    def __init__(self, message: str, details: Optional[List[str]] = None):
        super().__init__(message)
        self.details = list(details or [])

    def __str__(self) -> str:
        base = super().__str__()
        if not self.details:
            return base
        return f"{base}: " + "; ".join(self.details)


class DomainError(CoverageError, ValueError):
    """An argument is outside the domain of a special function or geometric helper"""


class ConvergenceError(CoverageError, ArithmeticError):
    """A series or quadrature did not reach its tolerance"""
