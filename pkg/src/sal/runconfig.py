"""Run descriptions: what to train, with what, for how long."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .config import SalConfig
from .landscapes import LandscapeSpec, make_double_well, quadratic


@dataclass
class TwoMoonsTask:
    kind = "two_moons"
    n: int = 200
    noise_std: float = 0.15

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("two_moons needs an even n >= 2")


@dataclass
class CsvTask:
    path: str
    label_column: str
    standardize: bool = True
    kind = "csv"


@dataclass
class QuadraticTask:
    curvatures: tuple[float, ...]
    start: tuple[float, ...]
    kind = "quadratic"

    def __post_init__(self):
        self.curvatures = tuple(float(c) for c in self.curvatures)
        self.start = tuple(float(s) for s in self.start)
        if len(self.start) != len(self.curvatures):
            raise ValueError("start point and curvatures must share a dimension")

    def landscape(self) -> LandscapeSpec:
        return quadratic(self.curvatures)

    def start_point(self) -> np.ndarray:
        return np.asarray(self.start, dtype=np.float64)


@dataclass
class DoubleWellTask:
    sharp_width: float = 0.1
    flat_width: float = 1.0
    separation: float = 2.0
    sharp_depth: float = 1.0
    flat_depth: float = 1.0
    dim: int = 2
    start: Union[str, tuple[float, ...]] = "sharp"
    kind = "double_well"

    def landscape(self) -> LandscapeSpec:
        return make_double_well(
            self.sharp_width,
            self.flat_width,
            self.separation,
            depths=(self.sharp_depth, self.flat_depth),
            dim=self.dim,
        )

    def start_point(self) -> np.ndarray:
        if self.start == "sharp":
            return self.landscape().wells[0].center.copy()
        if self.start == "flat":
            return self.landscape().wells[1].center.copy()
        point = np.asarray(tuple(self.start), dtype=np.float64)
        if point.size != self.dim:
            raise ValueError("start point dimension does not match the landscape")
        return point

    def escape_threshold(self) -> float:
        return self.separation / 2.0


@dataclass
class FrozenTask:
    """Synthetic stagnation: constant loss, zero gradients, zero accuracy."""

    dim: int = 4
    kind = "frozen"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


TaskSpec = Union[TwoMoonsTask, CsvTask, QuadraticTask, DoubleWellTask, FrozenTask]

LANDSCAPE_KINDS = ("quadratic", "double_well")
DATASET_KINDS = ("two_moons", "csv")


@dataclass
class RunConfig:
    """Everything a reproducible run needs, seed included."""

    task: TaskSpec
    epochs: int = 50
    batch_size: int = 64
    seed: int = 0
    sal: SalConfig = field(default_factory=SalConfig)
    sal_enabled: bool = True
    optimizer: str = "adam"
    optimizer_params: dict = field(default_factory=dict)
    hidden: tuple[int, ...] = (16, 16)
    activation: str = "relu"
    model_seed: int | None = None
    monitor: str = "train"
    val_fraction: float = 0.0
    out_dir: str | None = None
    record_trajectory: bool = False
    trace_every: int = 0
    trace_probes: int = 25

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.monitor not in ("train", "val"):
            raise ValueError("monitor must be 'train' or 'val'")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")
        if self.monitor == "val" and self.val_fraction == 0.0:
            raise ValueError("monitor='val' requires val_fraction > 0")
        if self.trace_every < 0:
            raise ValueError("trace_every must be >= 0")
        if self.trace_probes < 1:
            raise ValueError("trace_probes must be >= 1")
        self.hidden = tuple(int(h) for h in self.hidden)

    def effective_optimizer_params(self) -> dict:
        params = {"learning_rate": 1e-5}
        params.update(self.optimizer_params)
        return params
