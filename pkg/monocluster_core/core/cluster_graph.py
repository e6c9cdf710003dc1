"""Cluster-graphs: ordered link sequences growing a polymer.

A cluster-graph G = (l_1, ..., l_p) over a source polymer Gamma_0 defines the
stages Gamma_i = Gamma_{i-1} united with l_i. Each link either joins the
current cluster to its roof (cluster-roof) or joins two roof boxes not both
in the copy-0 layer (roof-roof).

Index conventions: stage -1 is the empty polymer, whose roof is the copy-0
layer. The conception index of a box is the first stage whose roof holds it,
the creation index the first stage containing it; both default to p + 1.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import NonContributingGraph
from .logging_config import get_logger
from .mayer_lattice import Cell, MayerBox, Window
from .polymer import EMPTY_POLYMER, Polymer


class LinkKind(Enum):
    """Kinds of links."""
    CLUSTER_ROOF = "cluster-roof"
    ROOF_ROOF = "roof-roof"


@dataclass(frozen=True, order=True)
class Link:
    """Unordered pair of distinct boxes, stored in lattice order."""
    first: MayerBox
    second: MayerBox

    def __post_init__(self):
        if self.first == self.second:
            raise ValueError(f"Link endpoints must differ, got {self.first} twice")
        if self.second < self.first:
            first, second = self.second, self.first
            object.__setattr__(self, "first", first)
            object.__setattr__(self, "second", second)

    @property
    def endpoints(self) -> Tuple[MayerBox, MayerBox]:
        return (self.first, self.second)

    @property
    def is_vertical(self) -> bool:
        return self.first.cell == self.second.cell

    def other(self, box: MayerBox) -> MayerBox:
        if box == self.first:
            return self.second
        if box == self.second:
            return self.first
        raise ValueError(f"{box} is not an endpoint of {self}")

    def to_dict(self) -> List[dict]:
        return [self.first.to_dict(), self.second.to_dict()]

    @classmethod
    def from_dict(cls, data: Sequence[dict]) -> "Link":
        return cls(MayerBox.from_dict(data[0]), MayerBox.from_dict(data[1]))

    def __str__(self) -> str:
        return f"{{{self.first},{self.second}}}"


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of validating a link sequence."""
    valid: bool
    kinds: Tuple[LinkKind, ...]
    failed_index: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


@dataclass(frozen=True)
class IndexTable:
    """Conception and creation indices over a finite box set."""
    conception: Dict[MayerBox, int]
    creation: Dict[MayerBox, int]


def classify_link(stage: Polymer, link: Link) -> Tuple[Optional[LinkKind], str]:
    """Kind of ``link`` against the current stage, or None with the reason."""
    a, b = link.endpoints
    if (a in stage and stage.in_roof(b)) or (b in stage and stage.in_roof(a)):
        return LinkKind.CLUSTER_ROOF, ""
    if stage.in_roof(a) and stage.in_roof(b):
        if a.in_ground_layer and b.in_ground_layer:
            return None, "roof-roof link with both endpoints in the copy-0 layer"
        return LinkKind.ROOF_ROOF, ""
    return None, "endpoints are neither cluster-roof nor roof-roof"


class ClusterGraph:
    """Ordered sequence of links over a source polymer."""

    def __init__(self, source_polymer: Polymer, links: Sequence[Link] = ()):
        """Initialize the graph.

        Args:
            source_polymer: The stage-0 polymer Gamma_0
            links: Ordered links l_1..l_p (validity is checked lazily)
        """
        self.source_polymer = source_polymer
        self.links: Tuple[Link, ...] = tuple(links)
        self._validation: Optional[ValidationResult] = None
        self._stages: Optional[Tuple[Polymer, ...]] = None
        self._altitude_history: Optional[Dict[Cell, List[int]]] = None

    @classmethod
    def _trusted(
        cls,
        source_polymer: Polymer,
        links: Tuple[Link, ...],
        kinds: Tuple[LinkKind, ...],
        stages: Tuple[Polymer, ...],
    ) -> "ClusterGraph":
        graph = cls(source_polymer, links)
        graph._validation = ValidationResult(True, kinds)
        graph._stages = stages
        return graph

    @property
    def p(self) -> int:
        return len(self.links)

    def validate(self) -> ValidationResult:
        """Classify each link against the stage it extends; stop at the first bad one."""
        if self._validation is not None:
            return self._validation

        stage = self.source_polymer
        stages = [stage]
        kinds: List[LinkKind] = []
        result: Optional[ValidationResult] = None
        for q, link in enumerate(self.links, start=1):
            kind, reason = classify_link(stage, link)
            if kind is None:
                result = ValidationResult(False, tuple(kinds), q, reason)
                break
            stage = stage.union(link.endpoints)
            stages.append(stage)
            kinds.append(kind)

        if result is None:
            result = ValidationResult(True, tuple(kinds))
            self._stages = tuple(stages)
        self._validation = result
        return result

    def _require_valid(self) -> None:
        result = self.validate()
        if not result.valid:
            raise ValueError(
                f"Invalid cluster-graph: link {result.failed_index} fails {result.reason}"
            )

    @property
    def kinds(self) -> Tuple[LinkKind, ...]:
        self._require_valid()
        return self._validation.kinds

    @property
    def stages(self) -> Tuple[Polymer, ...]:
        """Stages Gamma_0 .. Gamma_p."""
        self._require_valid()
        return self._stages

    def stage(self, i: int) -> Polymer:
        """Stage Gamma_i for -1 <= i <= p."""
        if i == -1:
            return EMPTY_POLYMER
        return self.stages[i]

    @property
    def final_stage(self) -> Polymer:
        return self.stages[-1]

    def extend(self, link: Link) -> "ClusterGraph":
        """Graph with one more link; raises ValueError if the link is not admissible."""
        kind, reason = classify_link(self.final_stage, link)
        if kind is None:
            raise ValueError(f"Link {link} cannot extend the graph: {reason}")
        return ClusterGraph._trusted(
            self.source_polymer,
            self.links + (link,),
            self.kinds + (kind,),
            self.stages + (self.final_stage.union(link.endpoints),),
        )

    def truncated(self, length: int) -> "ClusterGraph":
        """The graph made of the first ``length`` links."""
        if not 0 <= length <= self.p:
            raise ValueError(f"Truncation length {length} outside 0..{self.p}")
        return ClusterGraph._trusted(
            self.source_polymer,
            self.links[:length],
            self.kinds[:length],
            self.stages[:length + 1],
        )

    # -- indices -----------------------------------------------------------

    def _history(self, cell: Cell) -> List[int]:
        """Altitudes of ``cell`` at stages -1, 0, ..., p."""
        if self._altitude_history is None:
            self._altitude_history = {}
        history = self._altitude_history.get(cell)
        if history is None:
            history = [-1] + [stage.altitude(cell) for stage in self.stages]
            self._altitude_history[cell] = history
        return history

    def conception(self, box: MayerBox) -> int:
        """mu_G(b): first stage i >= -1 whose roof contains b, else p + 1."""
        for j, top in enumerate(self._history(box.cell)):
            if box.copy == top + 1:
                return j - 1
        return self.p + 1

    def creation(self, box: MayerBox) -> int:
        """nu_G(b): first stage i >= -1 containing b, else p + 1."""
        for j, top in enumerate(self._history(box.cell)):
            if box.copy <= top:
                return j - 1
        return self.p + 1

    def conception_index(self, box: MayerBox, cutoff: int) -> int:
        """Conception index computed with the truncation at ``cutoff``."""
        self._check_cutoff(cutoff)
        return min(self.conception(box), cutoff)

    def creation_index(self, box: MayerBox, cutoff: int) -> int:
        """Creation index computed with the truncation at ``cutoff``."""
        self._check_cutoff(cutoff)
        return min(self.creation(box), cutoff)

    def _check_cutoff(self, cutoff: int) -> None:
        if not 0 <= cutoff <= self.p + 1:
            raise ValueError(f"Cutoff {cutoff} outside 0..{self.p + 1}")

    def link_indices(self, q: int) -> Tuple[LinkKind, int, int]:
        """(kind, s-mu, i-nu) of link q with indices truncated at q - 1."""
        if not 1 <= q <= self.p:
            raise ValueError(f"Link index {q} outside 1..{self.p}")
        link = self.links[q - 1]
        smu = max(self.conception_index(b, q - 1) for b in link.endpoints)
        inu = min(self.creation_index(b, q - 1) for b in link.endpoints)
        return self.kinds[q - 1], smu, inu

    def index_table(self, support: Sequence[Cell]) -> IndexTable:
        """Indices over Gamma_p and its roof above the given cells."""
        final = self.final_stage
        boxes = set(final.boxes) | set(final.roof(support))
        return IndexTable(
            conception={b: self.conception(b) for b in sorted(boxes)},
            creation={b: self.creation(b) for b in sorted(boxes)},
        )

    # -- structure ---------------------------------------------------------

    def is_contributing(self) -> bool:
        """True iff no omega weight of the graph vanishes identically."""
        for q in range(1, self.p + 1):
            kind, smu, inu = self.link_indices(q)
            if kind is LinkKind.CLUSTER_ROOF and smu >= inu:
                return False
            if kind is LinkKind.ROOF_ROOF and smu == -1:
                return False
        return True

    def link_counts(self) -> Dict[MayerBox, int]:
        """n_G(b): number of links having b as an endpoint."""
        counts: Dict[MayerBox, int] = {}
        for link in self.links:
            for b in link.endpoints:
                counts[b] = counts.get(b, 0) + 1
        return counts

    def stage_sizes(self) -> List[int]:
        return [len(stage) for stage in self.stages]

    def to_dict(self) -> dict:
        return {
            "sources": [b.to_dict() for b in self.source_polymer],
            "links": [link.to_dict() for link in self.links],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClusterGraph":
        sources = Polymer(frozenset(MayerBox.from_dict(b) for b in data["sources"]))
        return cls(sources, [Link.from_dict(l) for l in data.get("links", [])])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterGraph):
            return NotImplemented
        return self.source_polymer == other.source_polymer and self.links == other.links

    def __hash__(self) -> int:
        return hash((self.source_polymer, self.links))

    def __repr__(self) -> str:
        links = ", ".join(str(l) for l in self.links)
        return f"ClusterGraph(p={self.p}, links=[{links}])"


def validate(g: ClusterGraph) -> ValidationResult:
    return g.validate()


def conception_index(g: ClusterGraph, b: MayerBox, cutoff: int) -> int:
    return g.conception_index(b, cutoff)


def creation_index(g: ClusterGraph, b: MayerBox, cutoff: int) -> int:
    return g.creation_index(b, cutoff)


def sigma_map(g: ClusterGraph) -> Dict[int, int]:
    """sigma_G(q) = max of the conception indices of the roof boxes of
    W(Gamma_{q-1}) over the two cells of link q.

    Raises:
        NonContributingGraph: If the graph's omega-product vanishes or some
            sigma_G(q) is -1
    """
    if not g.is_contributing():
        raise NonContributingGraph(f"{g!r} has an identically vanishing omega weight")
    sigma: Dict[int, int] = {}
    for q, link in enumerate(g.links, start=1):
        stage = g.stage(q - 1)
        value = max(g.conception(stage.roof_box(b.cell)) for b in link.endpoints)
        if value == -1:
            raise NonContributingGraph(f"sigma({q}) = -1 for {g!r}")
        sigma[q] = value
    return sigma


def candidate_links(stage: Polymer, window: Window) -> List[Tuple[Link, LinkKind]]:
    """Admissible next links inside the window, in lattice order."""
    cluster = [b for b in stage.sorted_boxes() if window.contains_box(b)]
    roof = sorted(
        box for box in (stage.roof_box(c) for c in window.cells)
        if box.copy <= window.copy_ceiling
    )
    links: List[Tuple[Link, LinkKind]] = []
    for b in cluster:
        for r in roof:
            links.append((Link(b, r), LinkKind.CLUSTER_ROOF))
    for i, r1 in enumerate(roof):
        for r2 in roof[i + 1:]:
            if r1.in_ground_layer and r2.in_ground_layer:
                continue
            links.append((Link(r1, r2), LinkKind.ROOF_ROOF))
    links.sort(key=lambda item: item[0])
    return links


def first_links(window: Window, sources: Polymer) -> List[Link]:
    """Possible first links, one enumeration partition per entry."""
    return [link for link, _ in candidate_links(sources, window)]


def enumerate_graphs(
    window: Window,
    sources: Polymer,
    p_max: int,
    prefix: Sequence[Link] = (),
) -> Iterator[ClusterGraph]:
    """Yield every cluster-graph with p <= p_max whose final stage lies in the window.

    Graphs are produced depth-first in lexicographic order of link sequences
    (a graph precedes its extensions). With a prefix, only graphs extending
    it are produced.

    Args:
        window: Finite window
        sources: Source polymer, inside the window's copy-0 layer
        p_max: Maximal number of links
        prefix: Links every produced graph starts with

    Raises:
        ValueError: If the sources or the prefix leave the window
    """
    for box in sources.boxes:
        if not (box.in_ground_layer and window.contains_box(box)):
            raise ValueError(f"Source box {box} is not in the window's copy-0 layer")

    root = ClusterGraph(sources)
    root.validate()
    for link in prefix:
        root = root.extend(link)
    if not all(window.contains_box(b) for b in root.final_stage.boxes):
        raise ValueError("Enumeration prefix leaves the window")
    if root.p > p_max:
        return

    logger = get_logger("Enumerator")
    logger.debug("enumerating cluster-graphs", p_max=p_max, prefix_length=len(prefix))

    stack = [root]
    while stack:
        graph = stack.pop()
        yield graph
        if graph.p < p_max:
            children = [
                ClusterGraph._trusted(
                    graph.source_polymer,
                    graph.links + (link,),
                    graph.kinds + (kind,),
                    graph.stages + (graph.final_stage.union(link.endpoints),),
                )
                for link, kind in candidate_links(graph.final_stage, window)
            ]
            stack.extend(reversed(children))
