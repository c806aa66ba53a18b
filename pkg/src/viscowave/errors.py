"""Exception types raised by viscowave.

Every class subclasses the builtin an equivalent plain raise would use, so
callers can keep catching ``ValueError`` / ``RuntimeError``.
"""

from __future__ import annotations


class KernelDomainError(ValueError):
    """Input outside the region where a kernel formula is defined."""


class RangeError(OverflowError):
    """Result not representable in double precision."""


class UsageError(ValueError):
    """Inconsistent grid, stencil or solver configuration."""


class AccuracyError(RuntimeError):
    def __init__(self, message: str, estimate: float | None = None):
        """Quadrature or truncation budget exceeded.

        Args:
            message (str): Description of the failed evaluation
            estimate (float | None): Achieved error estimate, if known
        """
        super().__init__(message)
        self.estimate = estimate


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        """Invalid run configuration.

        Args:
            violations (list[str]): Every violated constraint, in file order
        """
        self.violations = list(violations)
        super().__init__(
            "Invalid configuration:\n" + "\n".join(f"  - {v}" for v in violations)
        )


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class EvaluationError(ValueError):
    def __init__(self, message: str, location: dict | None = None):
        """Expression or RHS evaluation failed.

        Args:
            message (str): What went wrong
            location (dict | None): Coordinates of the first offending point
        """
        if location:
            where = ", ".join(f"{k}={v:.6g}" for k, v in location.items())
            message = f"{message} at {where}"
        super().__init__(message)
        self.location = location or {}


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, differences: list[float]):
        super().__init__(message)
        self.differences = list(differences)


class ConsistencyError(RuntimeError):
    """Junction gap between consecutive windows above tolerance."""


class DivergenceError(RuntimeError):
    """Finite-difference solution blew up."""


class CertificationError(RuntimeError):
    """Refinement study did not behave monotonically."""


class ToleranceError(RuntimeError):
    """An identity or property check exceeded its tolerance."""


class OracleBandError(RuntimeError):
    """Green's-function and finite-difference solutions disagree."""
