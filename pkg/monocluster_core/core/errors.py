"""Exceptions raised by the monocluster package."""

from typing import Any, Dict, Optional


class MonoclusterError(Exception):
    """Base class for all package errors."""


class ConfigError(MonoclusterError, ValueError):
    """Invalid run configuration."""


class InvalidPolymer(MonoclusterError, ValueError):
    """A box set that is not downward closed in the copy index."""


class NonContributingGraph(MonoclusterError, ValueError):
    """A cluster-graph whose ω-product vanishes identically."""


class BudgetExceeded(MonoclusterError, RuntimeError):
    """A Wick evaluation would exceed the configured matching budget."""


class ContractViolation(MonoclusterError, RuntimeError):
    """A numeric contract failed.

    Args:
        check: Name of the failing check
        value: Observed value (deviation, ratio, eigenvalue, ...)
        limit: The contract limit
        witness: Configuration that produced the failure
    """

    def __init__(
        self,
        check: str,
        value: float,
        limit: float,
        witness: Optional[Dict[str, Any]] = None,
    ):
        self.check = check
        self.value = value
        self.limit = limit
        self.witness = witness or {}
        super().__init__(f"{check}: value {value:.6e} violates limit {limit:.6e}")

    def to_record(self) -> Dict[str, Any]:
        """Machine-readable failure record."""
        return {
            "status": "contract_violation",
            "check": self.check,
            "value": self.value,
            "limit": self.limit,
            "witness": self.witness,
        }
