"""Polymers: downward-closed box sets, altitudes, roofs and skies."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Sequence

from .errors import InvalidPolymer
from .mayer_lattice import Cell, MayerBox, cell_of_point


class Region(Enum):
    """Partition of the Mayer lattice induced by a polymer."""
    CLUSTER = "cluster"
    ROOF = "roof"
    SKY = "sky"


@dataclass(frozen=True)
class Polymer:
    """A finite set of boxes closed downward in the copy index.

    The polymer is determined by its altitude map ``cell -> max copy``;
    cells without boxes have altitude -1. The roof over a cell is the box
    one copy above the altitude, the sky is everything higher.
    """
    boxes: FrozenSet[MayerBox] = frozenset()
    _altitudes: Dict[Cell, int] = field(default_factory=dict, init=False,
                                        repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "boxes", frozenset(self.boxes))
        altitudes: Dict[Cell, int] = {}
        for box in self.boxes:
            if box.copy > altitudes.get(box.cell, -1):
                altitudes[box.cell] = box.copy
        for cell, top in altitudes.items():
            for k in range(top):
                if MayerBox(cell, k) not in self.boxes:
                    raise InvalidPolymer(
                        f"Box {MayerBox(cell, top)} present but {MayerBox(cell, k)} missing"
                    )
        object.__setattr__(self, "_altitudes", altitudes)

    @classmethod
    def from_altitudes(cls, altitudes: Mapping[Cell, int]) -> "Polymer":
        """Rebuild a polymer from its altitude map."""
        return cls(frozenset(
            MayerBox(cell, k) for cell, top in altitudes.items() for k in range(top + 1)
        ))

    def altitude(self, cell: Cell) -> int:
        return self._altitudes.get(cell, -1)

    @property
    def altitude_map(self) -> Dict[Cell, int]:
        return dict(self._altitudes)

    @property
    def cells(self) -> List[Cell]:
        return sorted(self._altitudes)

    def roof_box(self, cell: Cell) -> MayerBox:
        return MayerBox(cell, self.altitude(cell) + 1)

    def in_roof(self, box: MayerBox) -> bool:
        return box.copy == self.altitude(box.cell) + 1

    def roof(self, support: Sequence[Cell]) -> FrozenSet[MayerBox]:
        return frozenset(self.roof_box(cell) for cell in support)

    def region_of(self, box: MayerBox) -> Region:
        top = self.altitude(box.cell)
        if box.copy <= top:
            return Region.CLUSTER
        if box.copy == top + 1:
            return Region.ROOF
        return Region.SKY

    def union(self, boxes: Iterable[MayerBox]) -> "Polymer":
        """New polymer with the given boxes added (closure is re-validated)."""
        return Polymer(self.boxes | frozenset(boxes))

    def sorted_boxes(self) -> List[MayerBox]:
        return sorted(self.boxes)

    def __contains__(self, box: object) -> bool:
        return box in self.boxes

    def __iter__(self) -> Iterator[MayerBox]:
        return iter(self.sorted_boxes())

    def __len__(self) -> int:
        return len(self.boxes)


EMPTY_POLYMER = Polymer()


def altitude(p: Polymer, c: Cell) -> int:
    return p.altitude(c)


def roof(p: Polymer, support: Sequence[Cell]) -> FrozenSet[MayerBox]:
    return p.roof(support)


def region_of(p: Polymer, b: MayerBox) -> Region:
    return p.region_of(b)


def make_source_polymer(sources: Sequence[Sequence[float]]) -> Polymer:
    """Copy-0 boxes over the cells containing at least one source point."""
    return Polymer(frozenset(MayerBox(cell_of_point(x), 0) for x in sources))
