"""Quadrature on the ordered simplex 1 > h_1 > ... > h_p > 0.

With h_q = s_1 s_2 ... s_q the simplex becomes the cube (0, 1)^p and
dh = prod_j s_j^{p-j} ds. The integrands met in the expansion become
polynomials in s, so tensor Gauss-Legendre is exact once the per-variable
degree is covered.
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import special


def points_for_degree(degree: int) -> int:
    """Gauss-Legendre points integrating per-variable degree ``degree`` exactly."""
    return max(1, int(math.ceil((degree + 1) / 2.0)))


@dataclass(frozen=True)
class SimplexRule:
    """Nodes h (K x p) and weights (K,) including the Jacobian."""
    p: int
    points: int
    h_nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.size


def simplex_rule(p: int, points: int) -> SimplexRule:
    """Tensor Gauss-Legendre rule in s mapped onto the p-simplex."""
    if p < 0:
        raise ValueError(f"p must be nonnegative, got {p}")
    if points < 1:
        raise ValueError(f"points must be positive, got {points}")
    if p == 0:
        return SimplexRule(0, points, np.zeros((1, 0)), np.ones(1))
    x, w = special.roots_legendre(points)
    s_axis = 0.5 * (x + 1.0)
    w_axis = 0.5 * w
    mesh = np.meshgrid(*([s_axis] * p), indexing="ij")
    s = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*([w_axis] * p), indexing="ij")
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    exponents = np.arange(p - 1, -1, -1)
    weights = weights * np.prod(s ** exponents, axis=1)
    h = np.cumprod(s, axis=1)
    return SimplexRule(p, points, h, weights)


def integrate_over_simplex(
    integrand: Callable[[Tuple[float, ...]], np.ndarray],
    p: int,
    points: int,
) -> np.ndarray:
    """Sum of weight * integrand(h) over the rule's nodes.

    Raises:
        FloatingPointError: If the integrand is not finite at some node
    """
    rule = simplex_rule(p, points)
    total = None
    for h, weight in zip(rule.h_nodes, rule.weights):
        value = np.asarray(integrand(tuple(float(v) for v in h)), dtype=float)
        if not np.all(np.isfinite(value)):
            raise FloatingPointError(f"Non-finite integrand at h = {tuple(h)}")
        total = weight * value if total is None else total + weight * value
    return total


def simplex_volume(p: int) -> float:
    return 1.0 / math.factorial(p)
