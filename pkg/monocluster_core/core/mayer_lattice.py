"""Cells of the unit discretization, Mayer boxes, and finite windows.

A cell is the unit box ``prod_i [k_i, k_i + 1)`` labelled by its lower corner.
A Mayer box pairs a cell with a nonnegative copy index. A window is a finite
ordered cell list together with a copy ceiling N; its box set is
``cells x {0, ..., N}``.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True, order=True)
class Cell:
    """Unit cell of the spatial discretization."""
    coords: Tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) == 0:
            raise ValueError("Cell needs at least one coordinate")
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def lower_corner(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.coords) + ")"


@dataclass(frozen=True, order=True)
class MayerBox:
    """A box (cell, copy) of the Mayer lattice."""
    cell: Cell
    copy: int

    def __post_init__(self):
        if self.copy < 0:
            raise ValueError(f"Copy index must be nonnegative, got {self.copy}")

    @property
    def in_ground_layer(self) -> bool:
        """True for boxes of the copy-0 layer."""
        return self.copy == 0

    def with_copy(self, copy: int) -> "MayerBox":
        return MayerBox(self.cell, copy)

    def to_dict(self) -> dict:
        return {"cell": list(self.cell.coords), "copy": self.copy}

    @classmethod
    def from_dict(cls, data: dict) -> "MayerBox":
        return cls(Cell(tuple(data["cell"])), int(data["copy"]))

    def __str__(self) -> str:
        return f"[{self.cell},{self.copy}]"


@dataclass(frozen=True)
class Window:
    """Finite window: ordered cells and the copy ceiling N."""
    cells: Tuple[Cell, ...]
    copy_ceiling: int

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ValueError("Window must contain at least one cell")
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("Window cells must be distinct")
        dims = {c.dimension for c in self.cells}
        if len(dims) != 1:
            raise ValueError(f"Window cells have mixed dimensions: {sorted(dims)}")
        if self.copy_ceiling < 0:
            raise ValueError(f"Copy ceiling must be nonnegative, got {self.copy_ceiling}")

    @classmethod
    def hypercube(
        cls,
        dim: int,
        side_length: int,
        copy_ceiling: int,
        origin: Optional[Sequence[int]] = None,
    ) -> "Window":
        """Build the hypercube window ``origin + {0..side_length-1}^dim``."""
        if dim < 1:
            raise ValueError(f"Dimension must be positive, got {dim}")
        if side_length < 1:
            raise ValueError(f"Side length must be positive, got {side_length}")
        origin = tuple(origin) if origin is not None else (0,) * dim
        if len(origin) != dim:
            raise ValueError(f"Origin {origin} does not have dimension {dim}")
        cells = [
            Cell(tuple(o + k for o, k in zip(origin, offset)))
            for offset in itertools.product(range(side_length), repeat=dim)
        ]
        return cls(tuple(sorted(cells)), copy_ceiling)

    @property
    def dimension(self) -> int:
        return self.cells[0].dimension

    @property
    def volume(self) -> int:
        return len(self.cells)

    def contains_cell(self, cell: Cell) -> bool:
        return cell in self._cell_set

    def contains_box(self, box: MayerBox) -> bool:
        return box.copy <= self.copy_ceiling and box.cell in self._cell_set

    @property
    def _cell_set(self) -> frozenset:
        cached = self.__dict__.get("_cells_cache")
        if cached is None:
            cached = frozenset(self.cells)
            object.__setattr__(self, "_cells_cache", cached)
        return cached

    def with_cells(self, cells: Iterable[Cell]) -> "Window":
        return Window(tuple(cells), self.copy_ceiling)


def cell_of_point(x: Sequence[float]) -> Cell:
    """Return the unique cell containing x (half-open, floor semantics)."""
    point = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(point)):
        raise ValueError(f"Point has non-finite coordinates: {x}")
    return Cell(tuple(int(c) for c in np.floor(point)))


def cell_distance(a: Cell, b: Cell) -> float:
    """Euclidean distance between the closed unit boxes of two cells."""
    if a.dimension != b.dimension:
        raise ValueError(f"Dimension mismatch: {a.dimension} vs {b.dimension}")
    gaps = [max(0, abs(i - j) - 1) for i, j in zip(a.coords, b.coords)]
    return math.sqrt(sum(g * g for g in gaps))


def boxes_in_window(w: Window) -> List[MayerBox]:
    """All boxes of the window, in lattice (cell, copy) order."""
    return sorted(
        MayerBox(cell, k) for cell in w.cells for k in range(w.copy_ceiling + 1)
    )
