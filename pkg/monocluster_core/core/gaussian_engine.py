"""Finite Gaussian surrogate of the model and the monocluster expansion.

Every interacting quantity is a truncated series in the coupling. The
r-th coefficient of an integral of exp(-lambda V) F is E[F V^r] (-1)^r / r!,
evaluated with the Isserlis recursion of ``wick``. Field variables are the
source points and the interaction nodes of each box; a node carries the
quadrature weight 1/nodes_per_cell.
"""

import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import hermite_e
from numpy.polynomial import polynomial as npoly
from scipy import integrate, linalg, optimize

from .cluster_graph import ClusterGraph, Link, candidate_links, enumerate_graphs
from .errors import BudgetExceeded, NonContributingGraph
from .interpolation import HVector, InterpolationMatrix, MatrixTemplate, empty_matrix, omega_product
from .kernel import Kernel
from .logging_config import get_logger
from .mayer_lattice import Cell, MayerBox, Window, boxes_in_window, cell_of_point
from .polymer import Polymer, make_source_polymer
from .series import LambdaSeries
from .simplex import integrate_over_simplex, points_for_degree
from .wick import FieldPolynomial, GaussianExpectation, matching_count
from .worker_pool import ExecutionMode, WorkerPool

DEFAULT_MATCHING_BUDGET = 10_000_000
MAX_QUADRATURE_DIMENSION = 4

_TERM = re.compile(r"^([+-]?)(\d*\.?\d*)\*?(x(?:\^?(\d+))?)?$")


@dataclass(frozen=True)
class Interaction:
    """Interaction polynomial P(x) = sum_j coefficients[j] x^j.

    The degree is even (2m, m >= 1) and the leading coefficient positive.
    """
    coefficients: Tuple[float, ...]

    def __post_init__(self):
        coeffs = [float(c) for c in self.coefficients]
        while coeffs and coeffs[-1] == 0.0:
            coeffs.pop()
        if len(coeffs) < 3 or (len(coeffs) - 1) % 2:
            raise ValueError(
                f"Interaction must have even degree >= 2, got coefficients {self.coefficients}"
            )
        if coeffs[-1] <= 0.0:
            raise ValueError(f"Leading coefficient must be positive, got {coeffs[-1]}")
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def parse(cls, text: str) -> "Interaction":
        """Parse strings such as ``"x4"``, ``"x4+0.5x2"`` or ``"2x^4 - x^2 + 1"``.

        Raises:
            ValueError: On malformed terms
        """
        compact = text.replace(" ", "").lower()
        if not compact:
            raise ValueError("Empty polynomial string")
        terms = re.findall(r"[+-]?[^+-]+", compact)
        if "".join(terms) != compact:
            raise ValueError(f"Cannot parse polynomial '{text}'")
        powers: Dict[int, float] = {}
        for term in terms:
            match = _TERM.match(term)
            if not match or (not match.group(2) and not match.group(3)):
                raise ValueError(f"Cannot parse term '{term}' in '{text}'")
            sign, number, variable, exponent = match.groups()
            value = float(number) if number not in ("", ".") else 1.0
            if sign == "-":
                value = -value
            power = 0 if not variable else int(exponent) if exponent else 1
            powers[power] = powers.get(power, 0.0) + value
        coeffs = [0.0] * (max(powers) + 1)
        for power, value in powers.items():
            coeffs[power] = value
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def m(self) -> int:
        return self.degree // 2

    @property
    def norm(self) -> float:
        """Largest absolute coefficient."""
        return max(abs(c) for c in self.coefficients)

    def __call__(self, x):
        return npoly.polyval(x, self.coefficients)

    def derivative(self) -> Tuple[float, ...]:
        return tuple(float(c) for c in npoly.polyder(self.coefficients))

    def min_value(self) -> float:
        roots = npoly.polyroots(self.derivative())
        real = [r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-9]
        return float(min(self(x) for x in real)) if real else float(self(0.0))

    def k2(self) -> float:
        """sup_x |P(x)| / (1 + x^{2m}), by a tangent grid refined locally."""
        theta = np.linspace(-0.5 * math.pi, 0.5 * math.pi, 4001)[1:-1]
        x = np.tan(theta)
        ratio = np.abs(self(x)) / (1.0 + x ** self.degree)
        best = int(np.argmax(ratio))
        step = theta[1] - theta[0]

        def negative_ratio(t: float) -> float:
            value = math.tan(t)
            return -abs(float(self(value))) / (1.0 + value ** self.degree)

        refined = optimize.minimize_scalar(
            negative_ratio,
            bounds=(max(theta[best] - step, theta[0]), min(theta[best] + step, theta[-1])),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return max(float(ratio[best]), -float(refined.fun), self.coefficients[-1])

    def __str__(self) -> str:
        parts = []
        for power in range(self.degree, -1, -1):
            c = self.coefficients[power]
            if c == 0.0:
                continue
            body = "" if power == 0 else "x" if power == 1 else f"x{power}"
            number = f"{abs(c):g}" if (abs(c) != 1.0 or power == 0) else ""
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign}{number}{body}")
        text = "".join(parts)
        return text[1:] if text.startswith("+") else text


@dataclass(eq=False)
class DiscretizedModel:
    """Window, kernel, interaction and sources of the Gaussian surrogate.

    Args:
        window: Cells and copy ceiling N
        kernel: Covariance kernel on R^d
        interaction: Interaction polynomial P
        sources: Source points, all in copy 0
        nodes_per_cell: q^d midpoint nodes per cell, weight 1/nodes_per_cell each
        coupling: lambda >= 0 (used by nonperturbative evaluations)
        matching_budget: Largest Wick pairing count an evaluation may need
    """
    window: Window
    kernel: Kernel
    interaction: Interaction
    sources: Tuple[Tuple[float, ...], ...] = ()
    nodes_per_cell: int = 1
    coupling: float = 0.0
    matching_budget: int = DEFAULT_MATCHING_BUDGET
    _offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.window.dimension
        if self.kernel.dimension != d:
            raise ValueError(
                f"Kernel dimension {self.kernel.dimension} differs from window dimension {d}"
            )
        if self.coupling < 0:
            raise ValueError(f"Coupling must be nonnegative, got {self.coupling}")
        if self.matching_budget < 1:
            raise ValueError(f"matching_budget must be positive, got {self.matching_budget}")
        self.sources = tuple(tuple(float(v) for v in x) for x in self.sources)
        for x in self.sources:
            if len(x) != d:
                raise ValueError(f"Source {x} does not have dimension {d}")
            if not self.window.contains_cell(cell_of_point(x)):
                raise ValueError(f"Source {x} lies outside the window")
        q = int(round(self.nodes_per_cell ** (1.0 / d)))
        if self.nodes_per_cell < 1 or q ** d != self.nodes_per_cell:
            raise ValueError(
                f"nodes_per_cell must be a positive {d}-th power, got {self.nodes_per_cell}"
            )
        axis = (np.arange(q) + 0.5) / q
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        self._offsets = np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def dimension(self) -> int:
        return self.window.dimension

    @property
    def node_weight(self) -> float:
        return 1.0 / self.nodes_per_cell

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def source_polymer(self) -> Polymer:
        return make_source_polymer(self.sources)

    def node_positions(self, cell: Cell) -> np.ndarray:
        return cell.lower_corner() + self._offsets

    def with_window(self, window: Window) -> "DiscretizedModel":
        return replace(self, window=window)


class FieldLayout:
    """Field variables over a box set: source points first, then the nodes
    of each box in lattice order."""

    def __init__(self, model: DiscretizedModel, boxes: Iterable[MayerBox], with_sources: bool = True):
        self.model = model
        self.boxes: List[MayerBox] = sorted(set(boxes))
        slot = {b: i for i, b in enumerate(self.boxes)}
        positions: List[np.ndarray] = []
        owner: List[int] = []
        self.vars_by_box: Dict[MayerBox, List[int]] = {b: [] for b in self.boxes}
        self.node_vars: List[int] = []
        self.source_vars: List[int] = []

        if with_sources:
            for x in model.sources:
                box = MayerBox(cell_of_point(x), 0)
                if box not in slot:
                    raise ValueError(f"Source {x} has no box in the layout")
                self.source_vars.append(len(owner))
                self.vars_by_box[box].append(len(owner))
                positions.append(np.asarray(x, dtype=float))
                owner.append(slot[box])
        for box in self.boxes:
            for point in model.node_positions(box.cell):
                self.node_vars.append(len(owner))
                self.vars_by_box[box].append(len(owner))
                positions.append(point)
                owner.append(slot[box])

        self.positions = np.array(positions, dtype=float).reshape(-1, model.dimension)
        self.owner = np.array(owner, dtype=int)
        self.kernel_matrix = model.kernel.gram(self.positions)

    @property
    def size(self) -> int:
        return self.owner.size

    def covariance(self, matrix: Optional[InterpolationMatrix] = None) -> np.ndarray:
        """C(x, x') M(b(x), b(x')); without a matrix M is 1 throughout."""
        if matrix is None:
            return self.kernel_matrix
        index = matrix.index
        try:
            rows = [index[b] for b in self.boxes]
        except KeyError as e:
            raise ValueError(f"Matrix support misses box {e.args[0]}")
        box_block = matrix.entries[np.ix_(rows, rows)]
        return self.kernel_matrix * box_block[np.ix_(self.owner, self.owner)]

    def source_product(self) -> FieldPolynomial:
        powers: Dict[int, int] = {}
        for var in self.source_vars:
            powers[var] = powers.get(var, 0) + 1
        return FieldPolynomial.monomial(powers)

    def vertex_polynomial(self) -> FieldPolynomial:
        """sum over nodes of weight * P(phi_node)."""
        total = FieldPolynomial()
        coeffs = self.model.interaction.coefficients
        for var in self.node_vars:
            total = total + FieldPolynomial.univariate(var, coeffs, self.model.node_weight)
        return total

    def integrand_series(self, order: int, with_sources: bool = True) -> List[FieldPolynomial]:
        """F_r = sources * V^r (-1)^r / r! for r = 0..order."""
        if order < 0:
            raise ValueError(f"order must be nonnegative, got {order}")
        first = self.source_product() if with_sources else FieldPolynomial.constant(1.0)
        vertex = self.vertex_polynomial()
        terms = [first]
        for r in range(1, order + 1):
            terms.append((terms[-1] * vertex).scale(-1.0 / r))
        return terms

    def derivation(self, poly: FieldPolynomial, link: Link) -> FieldPolynomial:
        """D_l: sum over variables z of b and z' of b' of C(x_z, x_z') d^2/dphi_z dphi_z'."""
        try:
            left = self.vars_by_box[link.first]
            right = self.vars_by_box[link.second]
        except KeyError as e:
            raise ValueError(f"Link box {e.args[0]} is outside the layout")
        kernel = self.kernel_matrix
        return poly.apply_pair_operator(left, right, lambda u, v: kernel[u, v])


def _guard(polys: Sequence[FieldPolynomial], budget: int) -> None:
    needed = max((matching_count(p) for p in polys), default=0)
    if needed > budget:
        raise BudgetExceeded(f"Wick evaluation needs {needed} pairings, budget is {budget}")


def _expectations(polys: Sequence[FieldPolynomial], covariance: np.ndarray) -> np.ndarray:
    expectation = GaussianExpectation(covariance)
    return np.array([0.0 if p.is_zero() else expectation(p) for p in polys])


class IntegrandFamily:
    """F_r polynomials of a layout and their images under link derivations,
    cached along link prefixes."""

    def __init__(self, layout: FieldLayout, order: int, with_sources: bool = True):
        self.layout = layout
        self.order = order
        base = layout.integrand_series(order, with_sources)
        _guard(base, layout.model.matching_budget)
        self._cache: Dict[Tuple[Link, ...], List[FieldPolynomial]] = {(): base}

    def derived(self, links: Sequence[Link]) -> List[FieldPolynomial]:
        key = tuple(links)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        parent = self.derived(key[:-1])
        result = [self.layout.derivation(poly, key[-1]) for poly in parent]
        self._cache[key] = result
        return result

    def evaluate(self, links: Sequence[Link], covariance: np.ndarray) -> np.ndarray:
        return _expectations(self.derived(links), covariance)


class ExpansionEngine:
    """Window-level evaluation of R(G, h) for many graphs and parameters.

    Args:
        model: The discretized model
        order: Series truncation order
    """

    def __init__(self, model: DiscretizedModel, order: int):
        self.model = model
        self.order = order
        self.logger = get_logger("ExpansionEngine")
        self.layout = FieldLayout(model, boxes_in_window(model.window))
        self.family = IntegrandFamily(self.layout, order)
        self._templates: Dict[Tuple[Link, ...], MatrixTemplate] = {}
        self.logger.debug(
            "built expansion engine", boxes=len(self.layout.boxes),
            variables=self.layout.size, order=order,
        )

    def _template(self, g: ClusterGraph) -> MatrixTemplate:
        template = self._templates.get(g.links)
        if template is None:
            template = MatrixTemplate(g, self.layout.boxes)
            self._templates[g.links] = template
        return template

    def r_series(self, g: ClusterGraph, h: HVector) -> LambdaSeries:
        """Series of R(G, h) in the window."""
        result = g.validate()
        if not result:
            raise ValueError(f"Invalid cluster-graph: {result.reason}")
        if len(h.values) != g.p + 1:
            raise ValueError(f"h has {len(h.values)} entries, expected p + 1 = {g.p + 1}")
        weight = omega_product(g, h)
        polys = self.family.derived(g.links)
        if weight == 0.0 or all(p.is_zero() for p in polys):
            return LambdaSeries.zero(self.order)
        covariance = self.layout.covariance(self._template(g).evaluate(h))
        return LambdaSeries(weight * _expectations(polys, covariance))

    def integrated_r_series(self, g: ClusterGraph, points: Optional[int] = None) -> LambdaSeries:
        """Integral of R(G, (h, 0)) over 1 > h_1 > ... > h_p > 0."""
        if not g.is_contributing():
            return LambdaSeries.zero(self.order)
        polys = self.family.derived(g.links)
        if all(p.is_zero() for p in polys):
            return LambdaSeries.zero(self.order)
        if g.p == 0:
            return self.r_series(g, HVector((0.0,)))
        pairs = max(p.degree for p in polys) // 2
        count = max(points_for_degree(pairs + g.p), points or 0)
        values = integrate_over_simplex(
            lambda h: self.r_series(g, HVector(h + (0.0,))).coefficients, g.p, count
        )
        return LambdaSeries(values)


def z_series(model: DiscretizedModel, cells: Iterable[Cell], order: int) -> LambdaSeries:
    """Free-boundary partition function of the copy-0 layer over ``cells``."""
    cells = sorted(set(cells))
    if not cells:
        return LambdaSeries.one(order)
    layout = FieldLayout(model, [MayerBox(c, 0) for c in cells], with_sources=False)
    family = IntegrandFamily(layout, order, with_sources=False)
    return LambdaSeries(family.evaluate((), layout.covariance()))


def z0_series(model: DiscretizedModel, order: int) -> LambdaSeries:
    """Partition function of one isolated cell."""
    if order < 0:
        raise ValueError(f"order must be nonnegative, got {order}")
    return z_series(model, [Cell((0,) * model.dimension)], order)


def s_unnormalized_series(model: DiscretizedModel, order: int) -> LambdaSeries:
    """Unnormalized Schwinger function S_{Lambda,u} on the copy-0 layer."""
    layout = FieldLayout(model, [MayerBox(c, 0) for c in model.window.cells])
    family = IntegrandFamily(layout, order)
    return LambdaSeries(family.evaluate((), layout.covariance()))


def h_series(model: DiscretizedModel, order: int) -> LambdaSeries:
    """H_{Lambda,N}: all window boxes, covariance C[M_empty]."""
    layout = FieldLayout(model, boxes_in_window(model.window))
    family = IntegrandFamily(layout, order)
    covariance = layout.covariance(empty_matrix(layout.boxes))
    return LambdaSeries(family.evaluate((), covariance))


def r_series(model: DiscretizedModel, g: ClusterGraph, h: HVector, order: int) -> LambdaSeries:
    return ExpansionEngine(model, order).r_series(g, h)


def full_columns(g: ClusterGraph, window: Window) -> List[Cell]:
    """Cells whose whole column up to N belongs to the final polymer."""
    stage = g.final_stage
    return [c for c in window.cells if stage.altitude(c) >= window.copy_ceiling]


def sky_box_count(g: ClusterGraph, window: Window) -> int:
    """Window boxes strictly above the roof of the final polymer."""
    stage = g.final_stage
    return sum(
        max(0, window.copy_ceiling - stage.altitude(c) - 1) for c in window.cells
    )


class ClusterIntegrand:
    """The A_0 integrand of one graph: Wick evaluation on Gamma_p only."""

    def __init__(self, model: DiscretizedModel, g: ClusterGraph, order: int):
        result = g.validate()
        if not result:
            raise ValueError(f"Invalid cluster-graph: {result.reason}")
        self.graph = g
        self.order = order
        self.layout = FieldLayout(model, g.final_stage.sorted_boxes())
        self.family = IntegrandFamily(self.layout, order)
        self.template = MatrixTemplate(g, self.layout.boxes)

    def __call__(self, h_prefix: Sequence[float]) -> np.ndarray:
        hv = HVector(tuple(float(v) for v in h_prefix) + (0.0,))
        weight = omega_product(self.graph, hv)
        if weight == 0.0:
            return np.zeros(self.order + 1)
        covariance = self.layout.covariance(self.template.evaluate(hv))
        return weight * self.family.evaluate(self.graph.links, covariance)

    def degree_bound(self) -> int:
        """Per-variable polynomial degree of the s-substituted integrand."""
        polys = self.family.derived(self.graph.links)
        return max(p.degree for p in polys) // 2 + self.graph.p


def a0_integrand(model: DiscretizedModel, g: ClusterGraph, h_prefix: Sequence[float], order: int) -> LambdaSeries:
    return LambdaSeries(ClusterIntegrand(model, g, order)(h_prefix))


def a0_series(
    model: DiscretizedModel,
    g: ClusterGraph,
    order: int,
    points: Optional[int] = None,
) -> LambdaSeries:
    """A_0(G): the cluster integrand integrated over the ordered simplex.

    Args:
        model: Model providing kernel, interaction and sources
        g: Contributing cluster-graph
        order: Series order
        points: Gauss-Legendre points per s-variable (raised to the exact count if lower)

    Raises:
        NonContributingGraph: If the weight product vanishes identically
        FloatingPointError: If the integrand is not finite at a node
    """
    if not g.is_contributing():
        raise NonContributingGraph(f"A_0 requested for non-contributing graph {g!r}")
    integrand = ClusterIntegrand(model, g, order)
    if g.p == 0:
        return LambdaSeries(integrand(()))
    count = max(points_for_degree(integrand.degree_bound()), points or 0)
    return LambdaSeries(integrate_over_simplex(integrand, g.p, count))


def normalization_factor(
    model: DiscretizedModel,
    g: ClusterGraph,
    order: int,
    z_cache: Optional[Dict[frozenset, LambdaSeries]] = None,
) -> LambdaSeries:
    """Z_0^{#Y - #Gamma_p} Z(Lambda minus Y) / Z(Lambda) with Y the full columns."""
    cache = z_cache if z_cache is not None else {}

    def z_of(cells: Iterable[Cell]) -> LambdaSeries:
        key = frozenset(cells)
        if key not in cache:
            cache[key] = z_series(model, key, order)
        return cache[key]

    full = set(full_columns(g, model.window))
    rest = [c for c in model.window.cells if c not in full]
    exponent = len(full) - len(g.final_stage)
    # translation invariance: any single cell gives Z_0
    z0 = z_of([Cell((0,) * model.dimension)])
    return (z0 ** exponent) * z_of(rest) / z_of(model.window.cells)


def _default_pool() -> WorkerPool:
    return WorkerPool(ExecutionMode.PARALLEL, name="expansion")


def schwinger(
    model: DiscretizedModel,
    order: int,
    p_max: int,
    points: Optional[int] = None,
    pool: Optional[WorkerPool] = None,
) -> LambdaSeries:
    """Normalized Schwinger function assembled from cluster-graph amplitudes.

    Raises:
        ValueError: If p_max < order
    """
    if p_max < order:
        raise ValueError(f"p_max ({p_max}) must be at least the order ({order})")
    logger = get_logger("Schwinger")
    graphs = [
        g for g in enumerate_graphs(model.window, model.source_polymer, p_max)
        if g.is_contributing()
    ]
    pool = pool or _default_pool()
    amplitudes = pool.run_map(lambda g: a0_series(model, g, order, points), graphs)

    z_cache: Dict[frozenset, LambdaSeries] = {}
    total = LambdaSeries.zero(order)
    for g, amplitude in zip(graphs, amplitudes):
        total = total + amplitude * normalization_factor(model, g, order, z_cache)
    logger.info("assembled schwinger series", graphs=len(graphs), order=order)
    return total


def normalized_schwinger_direct(model: DiscretizedModel, order: int) -> LambdaSeries:
    """S_{Lambda,u} / Z(Lambda) without the expansion."""
    return s_unnormalized_series(model, order) / z_series(model, model.window.cells, order)


@dataclass
class IdentityReport:
    """Both sides of the expansion identity."""
    lhs: LambdaSeries
    rhs: LambdaSeries
    deviation: float
    graph_count: int
    contributing_count: int

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs.to_list(),
            "rhs": self.rhs.to_list(),
            "deviation": self.deviation,
            "graph_count": self.graph_count,
            "contributing_count": self.contributing_count,
        }


def expansion_identity_check(
    model: DiscretizedModel,
    order: int,
    p_max: int,
    points: Optional[int] = None,
    pool: Optional[WorkerPool] = None,
) -> IdentityReport:
    """Compare H_{Lambda,N} against the sum over graphs of integrated R(G, (h, 0)).

    The reduction runs in enumeration order, whatever the pool's scheduling.

    Raises:
        ValueError: If p_max < order
        BudgetExceeded: If a Wick evaluation exceeds the model's budget
    """
    if p_max < order:
        raise ValueError(f"p_max ({p_max}) must be at least the order ({order})")
    logger = get_logger("IdentityCheck")
    engine = ExpansionEngine(model, order)
    graphs = list(enumerate_graphs(model.window, model.source_polymer, p_max))
    contributing = [g for g in graphs if g.is_contributing()]
    logger.info("enumerated graphs", total=len(graphs), contributing=len(contributing))

    # fill prefix caches before workers read them
    for g in contributing:
        engine.family.derived(g.links)

    pool = pool or _default_pool()
    pieces = pool.run_map(lambda g: engine.integrated_r_series(g, points), contributing)
    rhs = LambdaSeries.zero(order)
    for piece in pieces:
        rhs = rhs + piece
    lhs = h_series(model, order)
    deviation = lhs.relative_deviation(rhs)
    logger.info("expansion identity", order=order, p_max=p_max, deviation=deviation)
    return IdentityReport(lhs, rhs, deviation, len(graphs), len(contributing))


def fundamental_step_check(
    model: DiscretizedModel,
    g: ClusterGraph,
    h_prefix: Sequence[float],
    order: int,
    engine: Optional[ExpansionEngine] = None,
) -> float:
    """Max deviation in R(G,(h,h_m)) = R(G,(h,0)) + sum_l int_0^{h_m} R((G,l),(h,t,t)) dt.

    Args:
        model: The discretized model
        g: Valid graph of length m
        h_prefix: h_1 > ... > h_m
        order: Series order
        engine: Reusable engine for the same model and order
    """
    engine = engine or ExpansionEngine(model, order)
    prefix = tuple(float(v) for v in h_prefix)
    if len(prefix) != g.p:
        raise ValueError(f"h_prefix has {len(prefix)} entries, graph has p = {g.p}")
    h_m = prefix[-1] if prefix else 1.0
    lhs = engine.r_series(g, HVector(prefix + (h_m,)))
    rhs = engine.r_series(g, HVector(prefix + (0.0,))).coefficients.copy()

    for link, _ in candidate_links(g.final_stage, model.window):
        child = g.extend(link)
        if not child.is_contributing():
            continue

        def integrand(t: float, child: ClusterGraph = child) -> np.ndarray:
            return engine.r_series(child, HVector(prefix + (t, t))).coefficients

        value, _ = integrate.quad_vec(integrand, 0.0, h_m, epsabs=1e-13, epsrel=1e-12)
        rhs = rhs + value
    return lhs.max_deviation(LambdaSeries(rhs))


def factorization_check(model: DiscretizedModel, order: int) -> float:
    """Relative deviation between H_{Lambda,N} and S_{Lambda,u} Z_0^{N |Lambda|}."""
    lhs = h_series(model, order)
    layers = model.window.copy_ceiling * model.window.volume
    rhs = s_unnormalized_series(model, order) * (z0_series(model, order) ** layers)
    return lhs.relative_deviation(rhs)


def decoupling_check(
    model: DiscretizedModel,
    g: ClusterGraph,
    h_prefix: Sequence[float],
    order: int,
    engine: Optional[ExpansionEngine] = None,
) -> float:
    """Compare R(G,(h,0)) with A_0-integrand x Z(Lambda minus Y) x Z_0^{#sky}."""
    engine = engine or ExpansionEngine(model, order)
    prefix = tuple(float(v) for v in h_prefix)
    window_value = engine.r_series(g, HVector(prefix + (0.0,)))
    full = set(full_columns(g, model.window))
    rest = [c for c in model.window.cells if c not in full]
    product = (
        a0_integrand(model, g, prefix, order)
        * z_series(model, rest, order)
        * (z0_series(model, order) ** sky_box_count(g, model.window))
    )
    return window_value.max_deviation(product)


@dataclass
class WindowSequenceReport:
    """Normalized Schwinger coefficients over growing windows."""
    sides: List[int]
    coefficients: List[float]
    differences: List[float]
    contraction: List[float]

    def to_dict(self) -> dict:
        return {
            "sides": self.sides,
            "coefficients": self.coefficients,
            "differences": self.differences,
            "contraction": self.contraction,
        }


def window_sequence_check(
    kernel: Kernel,
    interaction: Interaction,
    sources: Sequence[Sequence[float]],
    sides: Sequence[int],
    order: int = 1,
    copy_ceiling: int = 1,
    origin: Optional[Sequence[int]] = None,
) -> WindowSequenceReport:
    """Order-``order`` coefficient of the expanded Schwinger function on
    hypercube windows of the given sides."""
    coefficients = []
    for side in sides:
        window = Window.hypercube(kernel.dimension, side, copy_ceiling, origin)
        model = DiscretizedModel(window, kernel, interaction, tuple(map(tuple, sources)))
        series = schwinger(model, order, order, pool=WorkerPool(ExecutionMode.SEQUENTIAL))
        coefficients.append(float(series.coefficients[order]))
    differences = [abs(b - a) for a, b in zip(coefficients, coefficients[1:])]
    contraction = [
        b / a if a > 0 else 0.0 for a, b in zip(differences, differences[1:])
    ]
    return WindowSequenceReport(list(sides), coefficients, differences, contraction)


def partition_function(model: DiscretizedModel, cells: Iterable[Cell], points: int = 40) -> float:
    """Nonperturbative Z over ``cells`` at the model's coupling, by tensor
    Gauss-Hermite quadrature.

    Raises:
        ValueError: If more than four node variables are involved
    """
    cells = sorted(set(cells))
    if not cells:
        return 1.0
    positions = np.concatenate([model.node_positions(c) for c in cells])
    n = positions.shape[0]
    if n > MAX_QUADRATURE_DIMENSION:
        raise ValueError(
            f"Quadrature over {n} variables exceeds {MAX_QUADRATURE_DIMENSION}"
        )
    covariance = model.kernel.gram(positions)
    eigenvalues, eigenvectors = linalg.eigh(covariance)
    root = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))

    nodes, weights = hermite_e.hermegauss(points)
    weights = weights / math.sqrt(2.0 * math.pi)
    mesh = np.meshgrid(*([nodes] * n), indexing="ij")
    wmesh = np.meshgrid(*([weights] * n), indexing="ij")
    standard = np.stack([m.ravel() for m in mesh], axis=1)
    grid_weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=1), axis=1)
    fields = standard @ root.T
    energy = model.node_weight * np.sum(model.interaction(fields), axis=1)
    return float(np.sum(grid_weights * np.exp(-model.coupling * energy)))
