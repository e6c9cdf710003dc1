"""Numeric checks of the uniform estimates behind the expansion.

Each check returns a :class:`CheckReport` carrying the worst observed ratio
against its limit and, on failure, a witness configuration. Constants that
are only known to exist are calibrated on an enumerated family, frozen to a
JSON file and loaded back into :class:`BoundConstants`; the checks only read
the loaded values.
"""

import itertools
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import sympy

from .cluster_graph import ClusterGraph, enumerate_graphs, sigma_map
from .errors import ContractViolation
from .gaussian_engine import (
    DiscretizedModel,
    FieldLayout,
    Interaction,
    full_columns,
    partition_function,
)
from .interpolation import HVector, omega_product, restrict
from .kernel import fit_decay_constant
from .logging_config import get_logger
from .mayer_lattice import Cell, MayerBox, Window, cell_distance, cell_of_point
from .polymer import Polymer
from .simplex import integrate_over_simplex, points_for_degree
from .wick import FieldPolynomial, GaussianExpectation, double_factorial
from .worker_pool import ExecutionMode, WorkerPool

ROW_SUM_TOLERANCE = 1e-12
RATIO_TOLERANCE = 1e-9
EXACT_SIMPLEX_MAX_P = 4


@dataclass
class CheckReport:
    """Outcome of one numeric check."""
    check: str
    passed: bool
    worst_ratio: float
    limit: float = 1.0
    witness: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "passed": self.passed,
            "worst_ratio": self.worst_ratio,
            "limit": self.limit,
            "witness": self.witness,
            "details": self.details,
        }

    def raise_on_failure(self) -> None:
        if not self.passed:
            raise ContractViolation(self.check, self.worst_ratio, self.limit, self.witness)


# -- lattice sums and constants ---------------------------------------------

def lattice_decay_sum(d: int, exponent: float, radius: int) -> float:
    """Upper bound on sum over cells D' of (1 + dist(D0, D'))^{-exponent}.

    Cells with offset sup-norm at most ``radius`` are summed explicitly. The
    rest is bounded by 2d 3^{d-1} / radius, valid for exponent >= d + 1.
    """
    if exponent < d + 1:
        raise ValueError(f"exponent must be at least d + 1 = {d + 1}, got {exponent}")
    if radius < 1:
        raise ValueError(f"radius must be positive, got {radius}")
    axis = np.arange(-radius, radius + 1)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    offsets = np.stack([m.ravel() for m in mesh], axis=1)
    gaps = np.maximum(np.abs(offsets) - 1, 0)
    distances = np.sqrt(np.sum(gaps ** 2, axis=1))
    explicit = float(np.sum((1.0 + distances) ** (-exponent)))
    return explicit + 2.0 * d * 3.0 ** (d - 1) / radius


def k3_constant(interaction: Interaction, c00: float) -> float:
    """K_2 (1 + (2m-1)!! max(C00, C00^m)): bounds E|P(phi)| per unit volume."""
    moment = double_factorial(2 * interaction.m - 1) * max(c00, c00 ** interaction.m)
    return interaction.k2() * (1.0 + moment)


def k6_constant(interaction: Interaction) -> float:
    """max(0, -min P): exp(-lambda int P) <= exp(lambda K_6) per unit box."""
    return max(0.0, -interaction.min_value())


@dataclass
class BoundConstants:
    """Constants of the uniform estimates for one (kernel, P, d) choice."""
    d: int
    m: int
    n: int
    c00: float
    p_norm: float
    k1_r: float
    k1_d1: float
    k2: float
    k3: float
    k4: float
    k5: float
    k6: float
    k7: float
    k9: float
    k10: float
    r1: int
    r: int

    def k8(self, n: Optional[int] = None) -> float:
        """K_8(n) = e^{(2K_3+K_6)n} (1+K_5)^n sqrt(n!) e^{(3m+1)n}."""
        n = self.n if n is None else n
        return (
            math.exp((2.0 * self.k3 + self.k6) * n)
            * (1.0 + self.k5) ** n
            * math.sqrt(math.factorial(n))
            * math.exp((3 * self.m + 1) * n)
        )

    def geometric_ratio(self, lam: float) -> float:
        return 2.0 * math.e * self.k9 * self.k10 * lam

    def check_compatible(self, model: DiscretizedModel) -> None:
        """Raise ValueError if the model has another d, m or source count."""
        actual = {"d": model.dimension, "m": model.interaction.m, "n": model.n_sources}
        wrong = {k: (getattr(self, k), v) for k, v in actual.items() if getattr(self, k) != v}
        if wrong:
            details = ", ".join(f"{k}={a} (model has {b})" for k, (a, b) in wrong.items())
            raise ValueError(f"Bound constants were calibrated for {details}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BoundConstants":
        missing = [f for f in cls.__dataclass_fields__ if f not in data]
        if missing:
            raise ValueError(f"BoundConstants data misses fields: {missing}")
        values = {k: data[k] for k in cls.__dataclass_fields__}
        for key in ("d", "m", "n", "r1", "r"):
            values[key] = int(values[key])
        return cls(**values)

    @classmethod
    def calibrate(
        cls,
        model: DiscretizedModel,
        p_max: int,
        decay_radius: Optional[float] = None,
        lattice_radius: int = 40,
    ) -> "BoundConstants":
        """Compute every constant from the kernel, the interaction and the
        graphs of length <= p_max in the model's window.

        This regenerates a frozen constants file; checks load that file.
        """
        logger = get_logger("BoundConstants")
        d = model.dimension
        interaction = model.interaction
        m = interaction.m
        r1 = 4 * d * (m + 2)
        r = r1 + d + 1
        radius = decay_radius if decay_radius is not None else _window_diameter(model.window) + 2.0

        c00 = model.kernel.value(np.zeros(d))
        k1_r = fit_decay_constant(model.kernel, r, radius)
        k1_d1 = fit_decay_constant(model.kernel, d + 1, radius)
        k2 = interaction.k2()
        k3 = k3_constant(interaction, c00)
        k4 = k1_d1 * lattice_decay_sum(d, d + 1, lattice_radius)
        k5 = math.sqrt(math.e * k4)
        k6 = k6_constant(interaction)

        graphs = contributing_graphs(model.window, model.source_polymer, p_max)
        k_prime = max([1.0] + [max(xi_values(g, m, r1).values(), default=1.0) for g in graphs])
        k7 = k_prime ** 2
        p_norm = interaction.norm
        k9 = (
            math.exp(2.0 * (2.0 * k3 + k6))
            * k1_r
            * (1.0 + p_norm) ** 2
            * (1.0 + k5) ** (4 * m)
            * math.exp(20.0 * m * m)
            * k7
        )
        sums = link_weight_sums(graphs, p_max, d)
        k10 = calibrate_k10(sums, model.n_sources)
        constants = cls(
            d=d, m=m, n=model.n_sources, c00=c00, p_norm=p_norm, k1_r=k1_r, k1_d1=k1_d1,
            k2=k2, k3=k3, k4=k4, k5=k5, k6=k6, k7=k7, k9=k9, k10=k10, r1=r1, r=r,
        )
        logger.info("calibrated bound constants", graphs=len(graphs), k4=k4, k7=k7, k10=k10)
        return constants


def _window_diameter(window: Window) -> float:
    coords = np.array([c.coords for c in window.cells], dtype=float)
    extent = coords.max(axis=0) - coords.min(axis=0) + 1.0
    return float(np.linalg.norm(extent))


def contributing_graphs(window: Window, sources: Polymer, p_max: int) -> List[ClusterGraph]:
    return [g for g in enumerate_graphs(window, sources, p_max) if g.is_contributing()]


def _link_distances(g: ClusterGraph) -> List[float]:
    return [cell_distance(link.first.cell, link.second.cell) for link in g.links]


def omega_integral(g: ClusterGraph) -> float:
    """Integral of |prod_q omega(G,(h,0),q)| over the ordered simplex."""
    if g.p == 0:
        return 1.0
    value = integrate_over_simplex(
        lambda h: abs(omega_product(g, HVector(h + (0.0,)))), g.p, points_for_degree(g.p)
    )
    return float(value)


def link_weight_sums(graphs: Sequence[ClusterGraph], p_max: int, d: int) -> List[float]:
    """J_p = sum over graphs of length p of the omega integral times
    prod_q (1 + dist_q)^{-(d+1)}."""
    sums = [0.0] * (p_max + 1)
    for g in graphs:
        decay = math.prod((1.0 + t) ** (-(d + 1)) for t in _link_distances(g))
        sums[g.p] += omega_integral(g) * decay
    return sums


def calibrate_k10(sums: Sequence[float], n: int) -> float:
    """Smallest K_10 with J_p <= e^n (2e K_10)^p and J_{p+1}/J_p <= 2e K_10."""
    candidates = [1e-12]
    for p, value in enumerate(sums):
        if p >= 1 and value > 0:
            candidates.append((value / math.exp(n)) ** (1.0 / p) / (2.0 * math.e))
    for a, b in zip(sums, sums[1:]):
        if a > 0:
            candidates.append(b / a / (2.0 * math.e))
    return max(candidates)


# -- parasite factors --------------------------------------------------------

def parasite_ratio(model: DiscretizedModel, g: ClusterGraph, points: int = 40) -> float:
    """Z_0^{#full - #Gamma_p} Z(Lambda minus full) / Z(Lambda), nonperturbatively."""
    full = set(full_columns(g, model.window))
    rest = [c for c in model.window.cells if c not in full]
    z0 = partition_function(model, [Cell((0,) * model.dimension)], points)
    z_rest = partition_function(model, rest, points)
    z_all = partition_function(model, model.window.cells, points)
    return z0 ** (len(full) - len(g.final_stage)) * z_rest / z_all


def parasite_bound_check(
    model: DiscretizedModel,
    g: ClusterGraph,
    constants: BoundConstants,
    points: int = 40,
) -> CheckReport:
    """0 < parasite ratio <= exp(2 K_3 lambda #Gamma_p), with the Jensen bounds
    exp(-K_3 lambda |S|) <= Z(S) for Z_0 and Z(Lambda)."""
    lam = model.coupling
    ratio = parasite_ratio(model, g, points)
    limit = math.exp(2.0 * constants.k3 * lam * len(g.final_stage))
    z0 = partition_function(model, [Cell((0,) * model.dimension)], points)
    z_all = partition_function(model, model.window.cells, points)
    jensen_z0 = z0 >= math.exp(-constants.k3 * lam) * (1.0 - RATIO_TOLERANCE)
    jensen_all = z_all >= math.exp(-constants.k3 * lam * model.window.volume) * (1.0 - RATIO_TOLERANCE)
    upper = True
    if model.interaction.min_value() >= 0:
        upper = z0 <= 1.0 + RATIO_TOLERANCE and z_all <= 1.0 + RATIO_TOLERANCE
    passed = 0.0 < ratio <= limit * (1.0 + RATIO_TOLERANCE) and jensen_z0 and jensen_all and upper
    return CheckReport(
        check="parasite_bound",
        passed=passed,
        worst_ratio=ratio / limit,
        witness=None if passed else {"graph": g.to_dict(), "lambda": lam},
        details={"ratio": ratio, "limit": limit, "z0": z0, "z_window": z_all,
                 "jensen": bool(jensen_z0 and jensen_all)},
    )


# -- row sums and covariance majorant ---------------------------------------

def row_sum_check(g: ClusterGraph, h: Sequence[float]) -> float:
    """Max over b in Gamma_p and cells D' of sum_k' Mbar(b, (D', k'))."""
    matrix = restrict(g, h)
    support = matrix.support
    columns: Dict[Cell, List[int]] = {}
    for j, box in enumerate(support):
        columns.setdefault(box.cell, []).append(j)
    worst = 0.0
    for i in range(len(support)):
        for cols in columns.values():
            worst = max(worst, float(np.sum(matrix.entries[i, cols])))
    return worst


def covariance_majorant(
    model: DiscretizedModel,
    g: ClusterGraph,
    h: Sequence[float],
    k1_d1: float,
) -> Tuple[np.ndarray, np.ndarray, FieldLayout]:
    """The covariance C[Mbar] on Gamma_p's variables and its majorant
    G = Mbar K_1(d+1) (1 + dist)^{-(d+1)}."""
    layout = FieldLayout(model, g.final_stage.sorted_boxes())
    matrix = restrict(g, h)
    covariance = layout.covariance(matrix)
    boxes = layout.boxes
    d = model.dimension
    decay = np.array([
        [(1.0 + cell_distance(a.cell, b.cell)) ** (-(d + 1)) for b in boxes] for a in boxes
    ]).reshape(len(boxes), len(boxes))
    index = matrix.index
    rows = [index[b] for b in boxes]
    box_majorant = np.abs(matrix.entries[np.ix_(rows, rows)]) * decay * k1_d1
    majorant = box_majorant[np.ix_(layout.owner, layout.owner)]
    return covariance, majorant, layout


def majorant_check(
    model: DiscretizedModel,
    g: ClusterGraph,
    h: Sequence[float],
    constants: BoundConstants,
) -> CheckReport:
    """|C[Mbar]| <= G entrywise and box row sums of G <= K_4."""
    covariance, majorant, layout = covariance_majorant(model, g, h, constants.k1_d1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(majorant > 0, np.abs(covariance) / majorant,
                          np.where(np.abs(covariance) > 0, np.inf, 0.0))
    worst = float(np.max(ratios, initial=0.0))
    first_vars = [layout.vars_by_box[b][-1] for b in layout.boxes]
    row_sums = majorant[np.ix_(first_vars, first_vars)].sum(axis=1)
    worst_row = float(np.max(row_sums, initial=0.0)) / constants.k4
    passed = worst <= 1.0 + RATIO_TOLERANCE and worst_row <= 1.0 + RATIO_TOLERANCE
    return CheckReport(
        check="covariance_majorant",
        passed=passed,
        worst_ratio=max(worst, worst_row),
        witness=None if passed else {"graph": g.to_dict(), "h": list(h)},
        details={"entry_ratio": worst, "row_sum_ratio": worst_row},
    )


# -- local factorials --------------------------------------------------------

def local_factorial_bound(k5: float, box_counts: Iterable[int]) -> float:
    counts = list(box_counts)
    r = sum(counts)
    return k5 ** r * math.prod(math.sqrt(math.factorial(c)) for c in counts)


def local_factorial_check(
    model: DiscretizedModel,
    constants: BoundConstants,
    trials: int,
    seed: int = 0,
    p_max: int = 2,
    max_points: int = 12,
) -> CheckReport:
    """|E[phi_z1 ... phi_zr]| <= K_5^r prod_b sqrt(n(b)!) for random insertions
    under C[Mbar] of random graphs and parameters."""
    rng = np.random.default_rng(seed)
    graphs = contributing_graphs(model.window, model.source_polymer, p_max)
    if not graphs:
        raise ValueError("No contributing graphs to sample covariances from")
    worst, witness = 0.0, None
    for _ in range(trials):
        g = graphs[int(rng.integers(len(graphs)))]
        h = tuple(np.sort(rng.uniform(0.0, 1.0, g.p))[::-1])
        layout = FieldLayout(model, g.final_stage.sorted_boxes())
        covariance = layout.covariance(restrict(g, h))
        r = 2 * int(rng.integers(1, max_points // 2 + 1))
        chosen = rng.choice(layout.node_vars, size=r, replace=True)
        powers: Dict[int, int] = {}
        for var in chosen:
            powers[int(var)] = powers.get(int(var), 0) + 1
        moment = GaussianExpectation(covariance)(FieldPolynomial.monomial(powers))
        per_box: Dict[int, int] = {}
        for var, k in powers.items():
            owner = int(layout.owner[var])
            per_box[owner] = per_box.get(owner, 0) + k
        ratio = abs(moment) / local_factorial_bound(constants.k5, per_box.values())
        if ratio > worst:
            worst = ratio
            witness = {"graph": g.to_dict(), "h": list(h), "powers": powers}
    passed = worst <= 1.0 + RATIO_TOLERANCE
    return CheckReport(
        check="local_factorials",
        passed=passed,
        worst_ratio=worst,
        witness=None if passed else witness,
        details={"trials": trials, "k5": constants.k5},
    )


# -- structure of contributing graphs ---------------------------------------

def triple_links(g: ClusterGraph) -> Optional[Tuple[MayerBox, Cell]]:
    """A box linked three times to boxes over one cell, if any."""
    counts: Dict[Tuple[MayerBox, Cell], int] = {}
    for link in g.links:
        for b in link.endpoints:
            key = (b, link.other(b).cell)
            counts[key] = counts.get(key, 0) + 1
            if counts[key] >= 3:
                return key
    return None


def triple_link_check(window: Window, p_max: int, sources: Optional[Polymer] = None) -> CheckReport:
    """No contributing graph links one box three times to one cell."""
    sources = sources if sources is not None else Polymer(frozenset({MayerBox(window.cells[0], 0)}))
    checked = 0
    for g in enumerate_graphs(window, sources, p_max):
        if not g.is_contributing():
            continue
        checked += 1
        triple = triple_links(g)
        if triple is not None:
            box, cell = triple
            return CheckReport(
                check="triple_links", passed=False, worst_ratio=1.0, limit=0.0,
                witness={"graph": g.to_dict(), "box": box.to_dict(), "cell": list(cell.coords)},
                details={"graphs_checked": checked},
            )
    return CheckReport(check="triple_links", passed=True, worst_ratio=0.0, limit=0.0,
                       details={"graphs_checked": checked})


def xi_values(g: ClusterGraph, m: int, r1: int) -> Dict[MayerBox, float]:
    """xi(b) = (n_G(b)!)^{m+1} prod over links at b of (1 + dist)^{-r1/2}."""
    counts = g.link_counts()
    values = {b: float(math.factorial(n)) ** (m + 1) for b, n in counts.items()}
    for link in g.links:
        factor = (1.0 + cell_distance(link.first.cell, link.second.cell)) ** (-0.5 * r1)
        for b in link.endpoints:
            values[b] *= factor
    return values


def volume_lhs(g: ClusterGraph, m: int, r1: int) -> float:
    factorials = math.prod(float(math.factorial(n)) ** (m + 1) for n in g.link_counts().values())
    decay = math.prod((1.0 + t) ** (-r1) for t in _link_distances(g))
    return factorials * decay


def volume_argument_check(
    window: Window,
    p_max: int,
    m: int,
    sources: Optional[Polymer] = None,
    k7: Optional[float] = None,
) -> CheckReport:
    """prod (n_G(b)!)^{m+1} prod_q (1 + dist_q)^{-r1} <= K_7^p, r1 = 4d(m+2)."""
    sources = sources if sources is not None else Polymer(frozenset({MayerBox(window.cells[0], 0)}))
    r1 = 4 * window.dimension * (m + 2)
    graphs = contributing_graphs(window, sources, p_max)
    if k7 is None:
        k_prime = max([1.0] + [max(xi_values(g, m, r1).values(), default=1.0) for g in graphs])
        k7 = k_prime ** 2
    worst, witness = 0.0, None
    for g in graphs:
        ratio = volume_lhs(g, m, r1) / k7 ** g.p
        if ratio > worst:
            worst, witness = ratio, g.to_dict()
    passed = worst <= 1.0 + RATIO_TOLERANCE
    return CheckReport(
        check="volume_argument", passed=passed, worst_ratio=worst,
        witness=None if passed else {"graph": witness},
        details={"r1": r1, "k7": k7, "graphs": len(graphs)},
    )


# -- simplex integrals -------------------------------------------------------

@dataclass
class SimplexIntegral:
    p: int
    subset: Tuple[int, ...]
    value: float
    exact: str
    bound: float

    @property
    def passed(self) -> bool:
        return self.value <= self.bound * (1.0 + RATIO_TOLERANCE)


def _s_factors(p: int, subset: FrozenSet[int], s: Sequence[sympy.Symbol]) -> List[sympy.Expr]:
    """Per-link factors after h_q = s_1 ... s_q, summed over admissible sigma(q)."""
    factors = []
    for q in range(1, p + 1):
        if q in subset:
            factors.append(sympy.Mul(*s[: q - 1]))
        else:
            factors.append(sympy.Add(*[sympy.Mul(*s[sigma: q - 1]) for sigma in range(1, q)]))
    return factors


def simplex_integral_check(p: int, subset: Iterable[int]) -> SimplexIntegral:
    """Sum over sigma with sigma = 0 on the subset and 1 <= sigma(q) < q
    elsewhere of the simplex integral of prod_q 1/h_{sigma(q)}.

    Exact rationals up to p = 4, 50-digit floats above.
    """
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    subset = frozenset(int(q) for q in subset)
    if not subset <= set(range(1, p + 1)):
        raise ValueError(f"Subset {sorted(subset)} is not inside 1..{p}")
    s = sympy.symbols(f"s1:{p + 1}")
    poly = sympy.Poly(sympy.expand(sympy.Mul(*_s_factors(p, subset, s))), *s)
    bound = math.e ** p / math.factorial(len(subset))
    if p <= EXACT_SIMPLEX_MAX_P:
        exact = sympy.Integer(0)
        for exponents, coeff in poly.terms():
            exact += coeff * sympy.Mul(*[sympy.Rational(1, e + 1) for e in exponents])
        return SimplexIntegral(p, tuple(sorted(subset)), float(exact), str(exact), bound)
    with mpmath.workdps(50):
        total = mpmath.fsum(
            mpmath.mpf(int(coeff)) / math.prod(e + 1 for e in exponents)
            for exponents, coeff in poly.terms()
        )
        return SimplexIntegral(p, tuple(sorted(subset)), float(total),
                               mpmath.nstr(total, 30), bound)


def simplex_suite(p_max: int = 5) -> CheckReport:
    """All subsets of 1..p for p <= p_max."""
    worst, witness, count = 0.0, None, 0
    for p in range(1, p_max + 1):
        for size in range(p + 1):
            for subset in itertools.combinations(range(1, p + 1), size):
                result = simplex_integral_check(p, subset)
                count += 1
                ratio = result.value / result.bound
                if ratio > worst:
                    worst, witness = ratio, {"p": p, "subset": list(subset), "value": result.exact}
    passed = worst <= 1.0 + RATIO_TOLERANCE
    return CheckReport(check="simplex_integrals", passed=passed, worst_ratio=worst,
                       witness=None if passed else witness, details={"cases": count})


# -- derivation procedures ---------------------------------------------------

def count_box_procedures(n: int, sources: int, monomial_degrees: Sequence[int]) -> int:
    """Ordered ways of performing n field derivations in one box.

    Each derivation hits a remaining source, opens a new vertex (choosing a
    monomial of P and one of its fields) or hits a remaining field of a
    vertex opened earlier.
    """
    degrees = tuple(sorted(j for j in monomial_degrees if j >= 1))

    @lru_cache(maxsize=None)
    def count(left: int, free_sources: int, vertices: Tuple[int, ...]) -> int:
        if left == 0:
            return 1
        total = 0
        if free_sources:
            total += free_sources * count(left - 1, free_sources - 1, vertices)
        for j in degrees:
            total += j * count(left - 1, free_sources, tuple(sorted(vertices + (j - 1,))))
        for i, fields in enumerate(vertices):
            if fields:
                rest = vertices[:i] + (fields - 1,) + vertices[i + 1:]
                total += fields * count(left - 1, free_sources, tuple(sorted(rest)))
        return total

    return count(n, sources, ())


def count_derivation_procedures(
    g: ClusterGraph,
    interaction: Interaction,
    source_counts: Dict[MayerBox, int],
) -> Tuple[int, float]:
    """(exhaustive count, prod_b (s(b) + 4 m^2 n_G(b))^{n_G(b)})."""
    degrees = [j for j, c in enumerate(interaction.coefficients) if c != 0.0 and j >= 1]
    m = interaction.m
    exact, bound = 1, 1.0
    for b, n in g.link_counts().items():
        s = source_counts.get(b, 0)
        exact *= count_box_procedures(n, s, degrees)
        bound *= float(s + 4 * m * m * n) ** n
    return exact, bound


def factorial_form_bound(g: ClusterGraph, m: int, n_sources: int) -> float:
    """e^{n + 8 m^2 p} prod_b n_G(b)!."""
    return math.exp(n_sources + 8 * m * m * g.p) * math.prod(
        math.factorial(k) for k in g.link_counts().values()
    )


def source_counts(model: DiscretizedModel) -> Dict[MayerBox, int]:
    counts: Dict[MayerBox, int] = {}
    for x in model.sources:
        box = MayerBox(cell_of_point(x), 0)
        counts[box] = counts.get(box, 0) + 1
    return counts


def derivation_count_check(model: DiscretizedModel, p_max: int) -> CheckReport:
    counts = source_counts(model)
    worst, witness, checked = 0.0, None, 0
    for g in contributing_graphs(model.window, model.source_polymer, p_max):
        exact, bound = count_derivation_procedures(g, model.interaction, counts)
        factorial_bound = factorial_form_bound(g, model.interaction.m, model.n_sources)
        ratio = max(exact / bound, bound / factorial_bound)
        checked += 1
        if ratio > worst:
            worst, witness = ratio, {"graph": g.to_dict(), "count": exact, "bound": bound}
    passed = worst <= 1.0 + RATIO_TOLERANCE
    return CheckReport(check="derivation_procedures", passed=passed, worst_ratio=worst,
                       witness=None if passed else witness, details={"graphs": checked})


# -- assembled majorant ------------------------------------------------------

@dataclass
class MajorantReport:
    lam: float
    geometric_ratio: float
    terms: List[float]
    geometric_terms: List[float]
    partial_sums: List[float]
    increment_ratios: List[float]
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def majorant_sum(
    model: DiscretizedModel,
    constants: BoundConstants,
    p_max: int,
    lam: float,
    tolerance: float = 0.05,
) -> MajorantReport:
    """Per-length sums of B(G) = K_8(n) K_9^p lam^p int prod |omega| (1+dist)^{-(d+1)}
    against K_8(n) e^n (2e K_9 K_10 lam)^p."""
    graphs = contributing_graphs(model.window, model.source_polymer, p_max)
    sums = link_weight_sums(graphs, p_max, model.dimension)
    k8 = constants.k8(model.n_sources)
    rho = constants.geometric_ratio(lam)
    terms = [k8 * (constants.k9 * lam) ** p * value for p, value in enumerate(sums)]
    geometric = [k8 * math.exp(model.n_sources) * rho ** p for p in range(p_max + 1)]
    partial = list(itertools.accumulate(terms))
    ratios = [b / a for a, b in zip(terms, terms[1:]) if a > 0]
    dominated = all(t <= g * (1.0 + RATIO_TOLERANCE) for t, g in zip(terms, geometric))
    cauchy = all(x <= rho + tolerance for x in ratios)
    return MajorantReport(lam, rho, terms, geometric, partial, ratios, dominated and cauchy)


# -- suite -------------------------------------------------------------------

CHECK_GROUPS = (
    "parasite", "row_sums", "local_factorials", "link_structure", "volume", "simplex", "convergence",
)


class BoundsSuite:
    """Runs the estimate checks on one model and aggregates their reports.

    Args:
        model: Model with nodes_per_cell = 1 when partition functions are needed
        p_max: Largest graph length
        constants: Frozen constants, checked against the model
        seed: RNG seed for sampled checks
        trials: Samples for the random checks
        pool: Worker pool running independent checks
    """

    def __init__(
        self,
        model: DiscretizedModel,
        p_max: int,
        constants: BoundConstants,
        seed: int = 0,
        trials: int = 200,
        pool: Optional[WorkerPool] = None,
    ):
        self.model = model
        self.p_max = p_max
        self.seed = seed
        self.trials = trials
        self.pool = pool or WorkerPool(ExecutionMode.PARALLEL, name="bounds")
        self.logger = get_logger("BoundsSuite")
        constants.check_compatible(model)
        self.constants = constants
        self._graphs: Optional[List[ClusterGraph]] = None

    @property
    def graphs(self) -> List[ClusterGraph]:
        if self._graphs is None:
            self._graphs = contributing_graphs(self.model.window, self.model.source_polymer, self.p_max)
        return self._graphs

    def _random_h(self, rng: np.random.Generator, p: int) -> Tuple[float, ...]:
        return tuple(float(v) for v in np.sort(rng.uniform(0.0, 1.0, p))[::-1])

    def parasite_factors(self) -> List[CheckReport]:
        return self.pool.run_map(
            lambda g: parasite_bound_check(self.model, g, self.constants), self.graphs
        )

    def row_sums(self, samples: int = 20) -> List[CheckReport]:
        rng = np.random.default_rng(self.seed)
        worst, witness = 0.0, None
        for g in self.graphs:
            for _ in range(samples):
                h = self._random_h(rng, g.p)
                value = row_sum_check(g, h)
                if value > worst:
                    worst, witness = value, {"graph": g.to_dict(), "h": list(h)}
        passed = worst <= 1.0 + ROW_SUM_TOLERANCE
        row_report = CheckReport("row_sums", passed, worst, 1.0 + ROW_SUM_TOLERANCE,
                                 None if passed else witness, {"graphs": len(self.graphs)})
        majorants = [
            majorant_check(self.model, g, self._random_h(rng, g.p), self.constants)
            for g in self.graphs
        ]
        return [row_report] + majorants

    def local_factorials(self) -> List[CheckReport]:
        return [local_factorial_check(self.model, self.constants, self.trials, self.seed,
                                      min(self.p_max, 2))]

    def link_structure(self) -> List[CheckReport]:
        return [triple_link_check(self.model.window, self.p_max, self.model.source_polymer)]

    def volume_argument(self) -> List[CheckReport]:
        return [
            volume_argument_check(self.model.window, self.p_max, self.model.interaction.m,
                                  self.model.source_polymer, self.constants.k7),
            derivation_count_check(self.model, min(self.p_max, 3)),
        ]

    def simplex_integrals(self) -> List[CheckReport]:
        return [simplex_suite(min(max(self.p_max, 1), 5))]

    def convergence(self, lam: Optional[float] = None) -> List[CheckReport]:
        if lam is None:
            lam = 0.25 / (math.e * self.constants.k9 * self.constants.k10)
        report = majorant_sum(self.model, self.constants, self.p_max, lam)
        sigma_ok = all(min(sigma_map(g).values(), default=0) >= 0 for g in self.graphs)
        worst = max(report.increment_ratios, default=0.0)
        return [CheckReport(
            check="majorant_convergence",
            passed=report.passed and sigma_ok,
            worst_ratio=worst,
            limit=report.geometric_ratio + 0.05,
            details=report.to_dict(),
        )]

    def run(self, group: str, lam: Optional[float] = None) -> List[CheckReport]:
        """Run one check group ('all' runs every group)."""
        dispatch = {
            "parasite": self.parasite_factors,
            "row_sums": self.row_sums,
            "local_factorials": self.local_factorials,
            "link_structure": self.link_structure,
            "volume": self.volume_argument,
            "simplex": self.simplex_integrals,
            "convergence": lambda: self.convergence(lam),
        }
        if group == "all":
            names = list(CHECK_GROUPS)
        elif group in dispatch:
            names = [group]
        else:
            raise ValueError(f"Unknown check group '{group}', expected one of {CHECK_GROUPS + ('all',)}")
        reports: List[CheckReport] = []
        for name in names:
            self.logger.info("running checks", group=name)
            batch = dispatch[name]()
            reports.extend(batch)
            failed = [r.check for r in batch if not r.passed]
            self.logger.info("checks finished", group=name, reports=len(batch), failed=failed)
        return reports

    def constants_dict(self) -> Dict[str, Any]:
        return self.constants.to_dict()
