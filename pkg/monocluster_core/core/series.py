"""Truncated power series in the coupling lambda."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

UNIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class LambdaSeries:
    """Coefficients c_0..c_R of a power series truncated at order R."""
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float).reshape(-1)
        if coeffs.size == 0:
            raise ValueError("LambdaSeries needs at least the constant coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def zero(cls, order: int) -> "LambdaSeries":
        return cls(np.zeros(order + 1))

    @classmethod
    def one(cls, order: int) -> "LambdaSeries":
        coeffs = np.zeros(order + 1)
        coeffs[0] = 1.0
        return cls(coeffs)

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "LambdaSeries":
        return cls(np.asarray(values, dtype=float))

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def _check(self, other: "LambdaSeries") -> None:
        if other.order != self.order:
            raise ValueError(f"Series orders differ: {self.order} vs {other.order}")

    def __add__(self, other: "LambdaSeries") -> "LambdaSeries":
        self._check(other)
        return LambdaSeries(self.coefficients + other.coefficients)

    def __sub__(self, other: "LambdaSeries") -> "LambdaSeries":
        self._check(other)
        return LambdaSeries(self.coefficients - other.coefficients)

    def __neg__(self) -> "LambdaSeries":
        return LambdaSeries(-self.coefficients)

    def __mul__(self, other) -> "LambdaSeries":
        if isinstance(other, (int, float, np.floating)):
            return LambdaSeries(self.coefficients * float(other))
        self._check(other)
        product = np.convolve(self.coefficients, other.coefficients)[: self.order + 1]
        return LambdaSeries(product)

    __rmul__ = __mul__

    def inverse(self) -> "LambdaSeries":
        """1/f for a series with unit constant term.

        Raises:
            ValueError: If c_0 differs from 1
        """
        c = self.coefficients
        if abs(c[0] - 1.0) > UNIT_TOLERANCE:
            raise ValueError(f"Division needs a unit constant term, got c_0 = {c[0]}")
        inv = np.zeros_like(c)
        inv[0] = 1.0
        for k in range(1, c.size):
            inv[k] = -np.dot(c[1:k + 1], inv[k - 1::-1][:k])
        return LambdaSeries(inv)

    def __truediv__(self, other) -> "LambdaSeries":
        if isinstance(other, (int, float, np.floating)):
            return LambdaSeries(self.coefficients / float(other))
        self._check(other)
        return self * other.inverse()

    def __pow__(self, exponent: int) -> "LambdaSeries":
        if not isinstance(exponent, (int, np.integer)):
            raise TypeError("Only integer powers are supported")
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = LambdaSeries.one(self.order)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def truncate(self, order: int) -> "LambdaSeries":
        if order > self.order:
            raise ValueError(f"Cannot extend a series of order {self.order} to {order}")
        return LambdaSeries(self.coefficients[: order + 1])

    def evaluate(self, lam: float) -> float:
        return float(np.polynomial.polynomial.polyval(lam, self.coefficients))

    def max_deviation(self, other: "LambdaSeries") -> float:
        self._check(other)
        return float(np.max(np.abs(self.coefficients - other.coefficients)))

    def relative_deviation(self, other: "LambdaSeries") -> float:
        """max_r |a_r - b_r| / max(|a_r|, |b_r|, floor), floor = 1e-12 * max |a|."""
        self._check(other)
        a, b = self.coefficients, other.coefficients
        floor = max(1e-12 * float(np.max(np.abs(a))), 1e-300)
        scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
        return float(np.max(np.abs(a - b) / scale))

    def to_list(self) -> List[float]:
        return [float(c) for c in self.coefficients]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaSeries):
            return NotImplemented
        return np.array_equal(self.coefficients, other.coefficients)

    def __repr__(self) -> str:
        return f"LambdaSeries({self.to_list()})"
