"""Translation-invariant covariance kernels and their decay constants.

The reference kernel is the single momentum slice

    C(x, y) = (2 pi)^{-d} int d^d p  e^{i p (x - y)} e^{-p^2} / (p^2 + 1),

evaluated by tensor Gauss-Legendre panels on the box |p_i| <= cutoff.
"""

import math
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .logging_config import get_logger

TOL_PSD = 1e-10
TAIL_TOLERANCE = 1e-12
MAX_GRID_POINTS = 4_000_000


class Kernel:
    """Covariance kernel C(x, y) = evaluator(x - y) with a separation cache.

    Args:
        dimension: Spatial dimension d
        evaluator: Vectorized map from an (k, d) array of separations to k values
        name: Label used in reports
        isotropic: Whether C depends on |x - y| only
    """

    def __init__(
        self,
        dimension: int,
        evaluator: Callable[[np.ndarray], np.ndarray],
        name: str = "custom",
        isotropic: bool = False,
    ):
        if dimension < 1:
            raise ValueError(f"Kernel dimension must be positive, got {dimension}")
        self.dimension = dimension
        self.name = name
        self.isotropic = isotropic
        self.decay_constants: Dict[int, float] = {}
        self._evaluator = evaluator
        self._cache: Dict[Tuple[float, ...], float] = {}

    @staticmethod
    def _key(separation: np.ndarray) -> Tuple[float, ...]:
        return tuple(float(v) for v in np.round(separation, 12) + 0.0)

    def values(self, separations: np.ndarray) -> np.ndarray:
        """Kernel values for an (k, d) array of separations."""
        separations = np.atleast_2d(np.asarray(separations, dtype=float))
        if separations.shape[1] != self.dimension:
            raise ValueError(
                f"Separations have dimension {separations.shape[1]}, kernel has {self.dimension}"
            )
        keys = [self._key(s) for s in separations]
        missing = sorted({k for k in keys if k not in self._cache})
        if missing:
            computed = self._evaluator(np.array(missing, dtype=float))
            for key, value in zip(missing, computed):
                self._cache[key] = float(value)
        return np.array([self._cache[k] for k in keys], dtype=float)

    def value(self, separation: Sequence[float]) -> float:
        return float(self.values(np.asarray(separation, dtype=float).reshape(1, -1))[0])

    def __call__(self, x: Sequence[float], y: Sequence[float]) -> float:
        return self.value(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def gram(self, points: np.ndarray) -> np.ndarray:
        """Matrix [C(x_i, x_j)] for an (n, d) array of points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        if n == 0:
            return np.zeros((0, 0))
        rows, cols = np.triu_indices(n)
        upper = self.values(points[rows] - points[cols])
        matrix = np.zeros((n, n))
        matrix[rows, cols] = upper
        matrix[cols, rows] = upper
        return matrix

    def min_gram_eigenvalue(self, points: np.ndarray) -> float:
        matrix = self.gram(points)
        if matrix.size == 0:
            return 0.0
        return float(np.linalg.eigvalsh(matrix)[0])

    def warm_up(self, separations: Iterable[Sequence[float]]) -> None:
        """Fill the cache for the given separations."""
        batch = np.array(list(separations), dtype=float)
        if batch.size:
            self.values(batch.reshape(-1, self.dimension))

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def __repr__(self) -> str:
        return f"Kernel(name='{self.name}', d={self.dimension}, cached={len(self._cache)})"


def _momentum_grid(
    d: int, quad_order: int, cutoff: float, panel_width: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre nodes and weights on [-cutoff, cutoff]^d."""
    panels = max(1, int(math.ceil(2.0 * cutoff / panel_width)))
    nodes, weights = special.roots_legendre(quad_order)
    edges = np.linspace(-cutoff, cutoff, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    axis_nodes = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    axis_weights = (half[:, None] * weights[None, :]).ravel()
    if axis_nodes.size ** d > MAX_GRID_POINTS:
        raise ValueError(
            f"Momentum grid of {axis_nodes.size}^{d} points exceeds {MAX_GRID_POINTS}; "
            "lower quad_order or widen the panels"
        )
    mesh = np.meshgrid(*([axis_nodes] * d), indexing="ij")
    wmesh = np.meshgrid(*([axis_weights] * d), indexing="ij")
    momenta = np.stack([m.ravel() for m in mesh], axis=1)
    weights_nd = np.prod(np.stack([w.ravel() for w in wmesh], axis=1), axis=1)
    return momenta, weights_nd


def slice_tail_bound(d: int, cutoff: float) -> float:
    """Upper bound on the integrand mass outside the box |p_i| <= cutoff."""
    return d * math.pi ** (d / 2.0) * float(special.erfc(cutoff)) / (2.0 * math.pi) ** d


def make_slice_kernel(
    d: int,
    quad_order: int,
    cutoff: float = 8.0,
    panel_width: Optional[float] = None,
) -> Kernel:
    """Build the single-slice kernel e^{-p^2}/(p^2+1).

    Args:
        d: Spatial dimension
        quad_order: Gauss-Legendre nodes per panel and axis
        cutoff: Truncation radius of each momentum coordinate
        panel_width: Panel width (default 0.25 in d=1, 1.0 otherwise)

    Returns:
        Kernel evaluating the momentum integral by product quadrature

    Raises:
        ValueError: If d <= 0 or the truncation/discretization error is too large
    """
    if d <= 0:
        raise ValueError(f"Dimension must be positive, got {d}")
    if quad_order < 2:
        raise ValueError(f"quad_order must be at least 2, got {quad_order}")
    tail = slice_tail_bound(d, cutoff)
    if tail > TAIL_TOLERANCE:
        raise ValueError(
            f"Momentum tail beyond cutoff {cutoff} is {tail:.3e} > {TAIL_TOLERANCE:.0e}"
        )
    if panel_width is None:
        panel_width = 0.25 if d == 1 else 1.0

    momenta, weights = _momentum_grid(d, quad_order, cutoff, panel_width)
    p2 = np.sum(momenta ** 2, axis=1)
    weighted = weights * np.exp(-p2) / (p2 + 1.0) / (2.0 * math.pi) ** d

    def evaluate(separations: np.ndarray) -> np.ndarray:
        out = np.empty(separations.shape[0])
        chunk = max(1, 2_000_000 // momenta.shape[0])
        for start in range(0, separations.shape[0], chunk):
            block = separations[start:start + chunk]
            out[start:start + chunk] = np.cos(block @ momenta.T) @ weighted
        return out

    # one coarser panel layout must agree at the origin
    coarse_m, coarse_w = _momentum_grid(d, max(2, quad_order // 2), cutoff, panel_width)
    coarse_p2 = np.sum(coarse_m ** 2, axis=1)
    coarse_origin = float(np.sum(coarse_w * np.exp(-coarse_p2) / (coarse_p2 + 1.0))
                          / (2.0 * math.pi) ** d)
    origin = float(np.sum(weighted))
    if abs(origin - coarse_origin) > 1e-10 * max(1.0, abs(origin)):
        raise ValueError(
            f"quad_order {quad_order} is too coarse: origin value moves by "
            f"{abs(origin - coarse_origin):.3e} when halved"
        )

    kernel = Kernel(d, evaluate, name="slice", isotropic=True)
    get_logger("Kernel").info(
        "built slice kernel", dimension=d, grid_points=momenta.shape[0], c00=origin
    )
    return kernel


def fit_decay_constant(kernel: Kernel, r: int, radius: float, step: float = 0.25) -> float:
    """K_1(r) = max over sampled |s| <= radius of |C(s)| (1 + |s|)^r.

    Samples are multiples of ``step``, so grids for growing radii are nested
    and the result is nondecreasing in the radius. Isotropic kernels are
    sampled along the first axis, others on the full grid of the ball.

    Raises:
        ValueError: If radius < 1 or r < 0
    """
    if radius < 1:
        raise ValueError(f"radius must be at least 1, got {radius}")
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    count = int(math.floor(radius / step + 1e-9))
    ticks = step * np.arange(count + 1)
    if kernel.isotropic or kernel.dimension == 1:
        samples = np.zeros((ticks.size, kernel.dimension))
        samples[:, 0] = ticks
    else:
        axis = np.concatenate((-ticks[:0:-1], ticks))
        mesh = np.meshgrid(*([axis] * kernel.dimension), indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=1)
        samples = grid[np.linalg.norm(grid, axis=1) <= radius + 1e-12]
    norms = np.linalg.norm(samples, axis=1)
    value = float(np.max(np.abs(kernel.values(samples)) * (1.0 + norms) ** r))
    kernel.decay_constants[r] = value
    return value
