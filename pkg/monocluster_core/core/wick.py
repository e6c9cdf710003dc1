"""Polynomials in Gaussian field variables and their Wick moments.

A FieldPolynomial is a sparse map from monomials to coefficients; a monomial
is a sorted tuple of (variable, power) pairs. Gaussian expectations use the
Isserlis recursion

    E[phi_v * R] = sum_u C(v, u) E[d R / d phi_u],

memoized on the remaining monomial, which sums over all perfect matchings
without listing them.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

Monomial = Tuple[Tuple[int, int], ...]

ONE: Monomial = ()


def _with_power(mono: Monomial, var: int, delta: int) -> Monomial:
    """Monomial with the power of ``var`` shifted by ``delta`` (result stays sorted)."""
    items = dict(mono)
    power = items.get(var, 0) + delta
    if power < 0:
        raise ValueError(f"Negative power for variable {var}")
    if power == 0:
        items.pop(var, None)
    else:
        items[var] = power
    return tuple(sorted(items.items()))


def _merge(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    items = dict(a)
    for var, power in b:
        items[var] = items.get(var, 0) + power
    return tuple(sorted(items.items()))


def monomial_degree(mono: Monomial) -> int:
    return sum(power for _, power in mono)


class FieldPolynomial:
    """Sparse polynomial in finitely many field variables."""

    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Monomial, float] = None):
        self.terms: Dict[Monomial, float] = {
            m: c for m, c in (terms or {}).items() if c != 0.0
        }

    @classmethod
    def constant(cls, value: float) -> "FieldPolynomial":
        return cls({ONE: float(value)})

    @classmethod
    def monomial(cls, powers: Dict[int, int], coefficient: float = 1.0) -> "FieldPolynomial":
        mono = tuple(sorted((v, k) for v, k in powers.items() if k > 0))
        return cls({mono: float(coefficient)})

    @classmethod
    def univariate(cls, var: int, coefficients: Sequence[float], scale: float = 1.0) -> "FieldPolynomial":
        """sum_j scale * coefficients[j] * phi_var^j."""
        terms: Dict[Monomial, float] = {}
        for power, c in enumerate(coefficients):
            if c != 0.0:
                terms[((var, power),) if power else ONE] = scale * float(c)
        return cls(terms)

    def __add__(self, other: "FieldPolynomial") -> "FieldPolynomial":
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0.0) + c
        return FieldPolynomial(terms)

    def __mul__(self, other) -> "FieldPolynomial":
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        terms: Dict[Monomial, float] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _merge(m1, m2)
                terms[m] = terms.get(m, 0.0) + c1 * c2
        return FieldPolynomial(terms)

    __rmul__ = __mul__

    def scale(self, factor: float) -> "FieldPolynomial":
        if factor == 0.0:
            return FieldPolynomial()
        return FieldPolynomial({m: c * factor for m, c in self.terms.items()})

    def derivative(self, var: int) -> "FieldPolynomial":
        terms: Dict[Monomial, float] = {}
        for mono, c in self.terms.items():
            power = dict(mono).get(var, 0)
            if power:
                m = _with_power(mono, var, -1)
                terms[m] = terms.get(m, 0.0) + c * power
        return FieldPolynomial(terms)

    def apply_pair_operator(
        self,
        left: Sequence[int],
        right: Sequence[int],
        weight: Callable[[int, int], float],
    ) -> "FieldPolynomial":
        """sum_{u in left, v in right} weight(u, v) d^2/(d phi_u d phi_v)."""
        left_set, right_set = set(left), set(right)
        terms: Dict[Monomial, float] = {}
        for mono, c in self.terms.items():
            powers = dict(mono)
            for u in [v for v in powers if v in left_set]:
                once = _with_power(mono, u, -1)
                c_u = c * powers[u]
                for v, power_v in once:
                    if v not in right_set:
                        continue
                    w = weight(u, v)
                    if w == 0.0:
                        continue
                    m = _with_power(once, v, -1)
                    terms[m] = terms.get(m, 0.0) + c_u * power_v * w
        return FieldPolynomial(terms)

    @property
    def degree(self) -> int:
        return max((monomial_degree(m) for m in self.terms), default=0)

    def variables(self) -> List[int]:
        return sorted({v for m in self.terms for v, _ in m})

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"FieldPolynomial(terms={len(self.terms)}, degree={self.degree})"


def double_factorial(n: int) -> int:
    """n!! with (-1)!! = 0!! = 1."""
    result = 1
    while n > 1:
        result *= n
        n -= 2
    return result


def matching_count(poly: FieldPolynomial) -> int:
    """Number of Wick pairings summed over all monomials."""
    total = 0
    for mono in poly.terms:
        degree = monomial_degree(mono)
        if degree % 2 == 0:
            total += double_factorial(degree - 1)
    return total


class GaussianExpectation:
    """Centered Gaussian expectation for a fixed covariance matrix."""

    def __init__(self, covariance: np.ndarray):
        self.covariance = np.asarray(covariance, dtype=float)
        self._memo: Dict[Monomial, float] = {ONE: 1.0}

    def moment(self, mono: Monomial) -> float:
        cached = self._memo.get(mono)
        if cached is not None:
            return cached
        if monomial_degree(mono) % 2:
            self._memo[mono] = 0.0
            return 0.0
        var = mono[0][0]
        rest = _with_power(mono, var, -1)
        row = self.covariance[var]
        total = 0.0
        for u, power in rest:
            c = row[u]
            if c != 0.0:
                total += power * c * self.moment(_with_power(rest, u, -1))
        self._memo[mono] = total
        return total

    def __call__(self, poly: FieldPolynomial) -> float:
        return sum(c * self.moment(m) for m, c in poly.terms.items())


def gaussian_expectation(poly: FieldPolynomial, covariance: np.ndarray) -> float:
    return GaussianExpectation(covariance)(poly)


@dataclass(frozen=True)
class WickProblem:
    """Field insertions and their covariance."""
    points: Tuple[Hashable, ...]
    covariance: Callable[[Hashable, Hashable], float]


def all_pairings(items: Sequence) -> Iterator[List[tuple]]:
    """Yield every perfect matching of the items."""
    items = list(items)
    if not items:
        yield []
        return
    first = items.pop(0)
    for i, item in enumerate(items):
        for rest in all_pairings(items[:i] + items[i + 1:]):
            yield [(first, item)] + rest


def pairing_sum(w: WickProblem) -> float:
    """Sum over explicit perfect matchings (brute force)."""
    if len(w.points) % 2:
        return 0.0
    return float(sum(
        math.prod(w.covariance(a, b) for a, b in pairing)
        for pairing in all_pairings(w.points)
    ))


def wick_moment(w: WickProblem) -> float:
    """Gaussian moment of the product of the insertions."""
    if len(w.points) % 2:
        return 0.0
    labels: List[Hashable] = []
    index: Dict[Hashable, int] = {}
    for point in w.points:
        if point not in index:
            index[point] = len(labels)
            labels.append(point)
    covariance = np.array([[w.covariance(a, b) for b in labels] for a in labels], dtype=float)
    powers: Dict[int, int] = {}
    for point in w.points:
        powers[index[point]] = powers.get(index[point], 0) + 1
    mono = tuple(sorted(powers.items()))
    return GaussianExpectation(covariance.reshape(len(labels), len(labels))).moment(mono)
