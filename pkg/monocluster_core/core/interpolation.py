"""Interpolated covariance matrices on the Mayer lattice.

For a cluster-graph G of length p and parameters h = (h_1, ..., h_{p+1}),
the matrix M_{G,h}(b, b') is 1 on the diagonal and otherwise

    h_{snu} * (1/h_{inu} - 1/h_{smu})   if smu < inu, else 0,

with smu = max(mu_G(b), mu_G(b')), inu = min(nu_G(b), nu_G(b')),
snu = max(nu_G(b), nu_G(b')), h_0 = 1 and 1/h_{-1} = 0.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .cluster_graph import ClusterGraph, LinkKind
from .mayer_lattice import Cell, MayerBox
from .polymer import Polymer, Region


@dataclass(frozen=True)
class HVector:
    """Decreasing interpolation parameters (h_1, ..., h_{p+1}).

    h_1 > ... > h_p > 0 strictly; the last entry may be 0 or repeat h_p.
    """
    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ValueError("HVector needs at least one entry")
        if any(v < 0.0 or v > 1.0 for v in values):
            raise ValueError(f"h entries must lie in [0, 1], got {values}")
        interior = values[:-1]
        if any(v <= 0.0 for v in interior):
            raise ValueError(f"h_1..h_p must be positive, got {values}")
        if any(a <= b for a, b in zip(interior, interior[1:])):
            raise ValueError(f"h_1..h_p must be strictly decreasing, got {values}")
        if len(values) > 1 and values[-1] > values[-2]:
            raise ValueError(f"h_(p+1) must not exceed h_p, got {values}")

    @property
    def p(self) -> int:
        return len(self.values) - 1

    def h(self, i: int) -> float:
        """h_i with h_0 = 1."""
        if i == 0:
            return 1.0
        if not 1 <= i <= len(self.values):
            raise IndexError(f"h index {i} outside 0..{len(self.values)}")
        return self.values[i - 1]

    def inv(self, i: int) -> float:
        """1/h_i with 1/h_{-1} = 0."""
        if i == -1:
            return 0.0
        value = self.h(i)
        if value == 0.0:
            raise ZeroDivisionError(f"1/h_{i} requested with h_{i} = 0")
        return 1.0 / value

    def ratio(self, num: int, den: int) -> float:
        """h_num / h_den with h_num/h_num = 1 and h_num/h_{-1} = 0."""
        if den == -1:
            return 0.0
        if num == den:
            return 1.0
        return self.h(num) / self.h(den)

    def with_zero(self) -> "HVector":
        return HVector(self.values + (0.0,))

    def with_repeat(self) -> "HVector":
        return HVector(self.values + (self.values[-1],))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class InterpolationMatrix:
    """Symmetric matrix indexed by an ordered box support."""
    support: Tuple[MayerBox, ...]
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        n = len(self.support)
        if self.entries.shape != (n, n):
            raise ValueError(f"Entries shape {self.entries.shape} does not match support size {n}")

    @property
    def index(self) -> Dict[MayerBox, int]:
        cached = self.__dict__.get("_index")
        if cached is None:
            cached = {b: i for i, b in enumerate(self.support)}
            object.__setattr__(self, "_index", cached)
        return cached

    def entry(self, b: MayerBox, b2: MayerBox) -> float:
        return float(self.entries[self.index[b], self.index[b2]])

    def restricted_to(self, boxes: Sequence[MayerBox]) -> "InterpolationMatrix":
        idx = [self.index[b] for b in boxes]
        return InterpolationMatrix(tuple(boxes), self.entries[np.ix_(idx, idx)].copy())

    def max_deviation(self, other: "InterpolationMatrix") -> float:
        if self.support != other.support:
            raise ValueError("Cannot compare matrices on different supports")
        return float(np.max(np.abs(self.entries - other.entries), initial=0.0))


def m_empty(b: MayerBox, b2: MayerBox) -> float:
    """Entries of the base matrix M_empty."""
    if b.copy == 0 and b2.copy == 0:
        return 1.0
    if b.copy == b2.copy:
        return 1.0 if b.cell == b2.cell else 0.0
    return 0.0


def empty_matrix(support: Sequence[MayerBox]) -> InterpolationMatrix:
    support = tuple(support)
    entries = np.array([[m_empty(a, b) for b in support] for a in support], dtype=float)
    return InterpolationMatrix(support, entries.reshape(len(support), len(support)))


def truncate(m: InterpolationMatrix, p: Polymer) -> InterpolationMatrix:
    """T_Gamma[M]: keep M on cluster pairs, 1 on roof pairs, identity on the sky."""
    regions = [p.region_of(b) for b in m.support]
    n = len(m.support)
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if regions[i] is not regions[j]:
                continue
            if regions[i] is Region.CLUSTER:
                entries[i, j] = m.entries[i, j]
            elif regions[i] is Region.ROOF:
                entries[i, j] = 1.0
            elif i == j:
                entries[i, j] = 1.0
    return InterpolationMatrix(m.support, entries)


def covint(g: ClusterGraph, h: HVector, b: MayerBox, b2: MayerBox) -> float:
    """Single entry M_{G,h}(b, b')."""
    if len(h.values) != g.p + 1:
        raise ValueError(f"h has {len(h.values)} entries, expected p + 1 = {g.p + 1}")
    if b == b2:
        return 1.0
    mu = (g.conception(b), g.conception(b2))
    nu = (g.creation(b), g.creation(b2))
    smu, inu, snu = max(mu), min(nu), max(nu)
    if smu >= inu:
        return 0.0
    return h.ratio(snu, inu) - h.ratio(snu, smu)


class MatrixTemplate:
    """Index structure of M_{G,h} on a fixed support, evaluated for many h.

    The conception/creation indices do not depend on h, so they are
    tabulated once and each evaluation is a vectorized lookup.
    """

    def __init__(self, g: ClusterGraph, support: Sequence[MayerBox]):
        self.graph = g
        self.support = tuple(support)
        mu = np.array([g.conception(b) for b in self.support], dtype=int)
        nu = np.array([g.creation(b) for b in self.support], dtype=int)
        self.smu = np.maximum.outer(mu, mu)
        self.inu = np.minimum.outer(nu, nu)
        self.snu = np.maximum.outer(nu, nu)
        self.coupled = self.smu < self.inu

    def evaluate(self, h: HVector) -> InterpolationMatrix:
        if len(h.values) != self.graph.p + 1:
            raise ValueError(
                f"h has {len(h.values)} entries, expected p + 1 = {self.graph.p + 1}"
            )
        # position i + 1 holds h_i; h_{-1} is never read as a value
        table = np.concatenate(([np.inf, 1.0], h.as_array()))
        num = table[self.snu + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            first = np.where(self.snu == self.inu, 1.0, num / table[self.inu + 1])
            second = np.where(
                self.smu == -1,
                0.0,
                np.where(self.snu == self.smu, 1.0, num / table[np.maximum(self.smu, 0) + 1]),
            )
        entries = np.where(self.coupled, first - second, 0.0)
        np.fill_diagonal(entries, 1.0)
        return InterpolationMatrix(self.support, entries)


def interpolation_matrix(
    g: ClusterGraph, h: HVector, support: Sequence[MayerBox]
) -> InterpolationMatrix:
    """Closed-form M_{G,h} on the given support."""
    return MatrixTemplate(g, support).evaluate(h)


def recursive_matrix(
    g: ClusterGraph, h: HVector, support: Sequence[MayerBox]
) -> InterpolationMatrix:
    """M_{G,h} built from M_empty by p + 1 convex truncation steps.

    Step j (0 <= j <= p) mixes with weight h_{j+1}/h_j:
    M <- (h_{j+1}/h_j) M + (1 - h_{j+1}/h_j) T_{Gamma_j}[M].
    """
    if len(h.values) != g.p + 1:
        raise ValueError(f"h has {len(h.values)} entries, expected p + 1 = {g.p + 1}")
    matrix = empty_matrix(support)
    for j in range(g.p + 1):
        weight = h.h(j + 1) / h.h(j)
        truncated = truncate(matrix, g.stage(j))
        matrix = InterpolationMatrix(
            matrix.support,
            weight * matrix.entries + (1.0 - weight) * truncated.entries,
        )
    return matrix


def default_support(g: ClusterGraph, margin: int = 1, sky: int = 2) -> List[MayerBox]:
    """Boxes over the graph's cells and their neighbours, up to ``sky`` copies
    above the highest altitude."""
    cells = set(g.source_polymer.cells)
    for link in g.links:
        cells.update(b.cell for b in link.endpoints)
    if not cells:
        raise ValueError("Graph has no cells to build a support from")
    grown = set()
    for cell in cells:
        for offset in np.ndindex(*([2 * margin + 1] * cell.dimension)):
            grown.add(Cell(tuple(c + o - margin for c, o in zip(cell.coords, offset))))
    top = max([g.final_stage.altitude(c) for c in grown] + [0])
    return sorted(MayerBox(c, k) for c in grown for k in range(top + sky + 1))


def recursion_check(
    g: ClusterGraph, h: HVector, support: Optional[Sequence[MayerBox]] = None
) -> float:
    """Max entrywise deviation between the closed form and the recursion."""
    support = tuple(support) if support is not None else tuple(default_support(g))
    closed = interpolation_matrix(g, h, support)
    recursive = recursive_matrix(g, h, support)
    return closed.max_deviation(recursive)


def positivity_check(m: InterpolationMatrix) -> float:
    """Minimum eigenvalue of the symmetric matrix."""
    if not m.support:
        return 0.0
    eigenvalues = linalg.eigh(m.entries, eigvals_only=True)
    return float(eigenvalues[0])


def omega(g: ClusterGraph, h: HVector, q: int) -> float:
    """Weight of link q, from indices truncated at q - 1."""
    kind, smu, inu = g.link_indices(q)
    if kind is LinkKind.CLUSTER_ROOF:
        if smu >= inu:
            return 0.0
        return h.inv(inu) - h.inv(smu)
    if kind is LinkKind.ROOF_ROOF:
        return -h.inv(smu)
    return 0.0


def omega_product(g: ClusterGraph, h: HVector) -> float:
    value = 1.0
    for q in range(1, g.p + 1):
        value *= omega(g, h, q)
    return value


def restrict(g: ClusterGraph, h: Sequence[float]) -> InterpolationMatrix:
    """The restriction of M_{G,(h_1..h_p,0)} to Gamma_p x Gamma_p.

    Args:
        g: Cluster-graph of length p
        h: Parameters h_1..h_p (the final 0 is appended here)
    """
    values = tuple(h.values) if isinstance(h, HVector) else tuple(float(v) for v in h)
    if len(values) != g.p:
        raise ValueError(f"restrict expects p = {g.p} entries, got {len(values)}")
    extended = HVector(values + (0.0,))
    return interpolation_matrix(g, extended, g.final_stage.sorted_boxes())
