"""Run configuration model."""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.gaussian_engine import DEFAULT_MATCHING_BUDGET, DiscretizedModel, Interaction
from ..core.kernel import Kernel, make_slice_kernel
from ..core.mayer_lattice import Window

MAX_ORDER = 3


class Tolerances(BaseModel):
    """Contract limits of the numeric checks."""
    model_config = ConfigDict(extra="forbid")

    identity: float = Field(1e-6, gt=0)
    step: float = Field(1e-8, gt=0)
    factorization: float = Field(1e-10, gt=0)
    recursion: float = Field(1e-12, gt=0)
    positivity: float = Field(1e-10, gt=0)
    row_sum: float = Field(1e-12, gt=0)
    independence: float = Field(1e-10, gt=0)


class KernelSettings(BaseModel):
    """Quadrature of the single-slice kernel."""
    model_config = ConfigDict(extra="forbid")

    quad_order: int = Field(16, ge=2)
    cutoff: float = Field(8.0, gt=0)
    panel_width: Optional[float] = Field(None, gt=0)


class RunConfig(BaseModel):
    """Everything a CLI run needs; serialized verbatim into the manifest."""
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(1, ge=1)
    side: int = Field(2, ge=1)
    copies: int = Field(1, ge=0)
    origin: Optional[List[int]] = None
    polynomial: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0, 1.0])
    lam: Optional[float] = Field(None, ge=0)
    sources: List[List[float]] = Field(default_factory=list)
    order: int = Field(1, ge=0, le=MAX_ORDER)
    p_max: int = Field(1, ge=0)
    nodes_per_cell: int = Field(1, ge=1)
    simplex_points: Optional[int] = Field(None, ge=1)
    matching_budget: int = Field(DEFAULT_MATCHING_BUDGET, ge=1)
    kernel: KernelSettings = Field(default_factory=KernelSettings)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output_format: Literal["csv", "json"] = "json"
    output_path: Optional[str] = None
    seed: int = 0
    trials: int = Field(200, ge=1)

    @field_validator("polynomial", mode="before")
    @classmethod
    def _parse_polynomial(cls, value):
        if isinstance(value, str):
            return list(Interaction.parse(value).coefficients)
        return value

    @field_validator("polynomial")
    @classmethod
    def _check_polynomial(cls, value: List[float]) -> List[float]:
        Interaction(tuple(value))
        return value

    @model_validator(mode="after")
    def _check_dimensions(self) -> "RunConfig":
        for source in self.sources:
            if len(source) != self.dim:
                raise ValueError(f"Source {source} does not have dimension {self.dim}")
        if self.origin is not None and len(self.origin) != self.dim:
            raise ValueError(f"Origin {self.origin} does not have dimension {self.dim}")
        return self

    @property
    def interaction(self) -> Interaction:
        return Interaction(tuple(self.polynomial))

    def window(self) -> Window:
        return Window.hypercube(self.dim, self.side, self.copies, self.origin)

    def source_points(self) -> Tuple[Tuple[float, ...], ...]:
        return tuple(tuple(point) for point in self.sources)


def build_kernel(config: RunConfig) -> Kernel:
    settings = config.kernel
    return make_slice_kernel(config.dim, settings.quad_order, settings.cutoff, settings.panel_width)


def build_model(config: RunConfig, kernel: Optional[Kernel] = None) -> DiscretizedModel:
    """The discretized model described by a run configuration."""
    return DiscretizedModel(
        window=config.window(),
        kernel=kernel or build_kernel(config),
        interaction=config.interaction,
        sources=config.source_points(),
        nodes_per_cell=config.nodes_per_cell,
        coupling=config.lam or 0.0,
        matching_budget=config.matching_budget,
    )
