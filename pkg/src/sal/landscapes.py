"""Analytic loss landscapes with closed-form gradients and curvature.

Two families: diagonal quadratics (exact everything) and sums of negative
Gaussian wells (sharp-versus-flat basin fixtures). Both expose loss, gradient
and the exact Hessian trace at any point, which is what the verification
suite checks estimators against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QUADRATIC = "quadratic"
GAUSSIAN_WELLS = "gaussian_wells"


@dataclass(frozen=True)
class Well:
    center: np.ndarray
    depth: float
    width: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).ravel())
        if not self.depth > 0:
            raise ValueError("well depth must be > 0")
        if not self.width > 0:
            raise ValueError("well width must be > 0")


@dataclass(frozen=True)
class LandscapeSpec:
    kind: str
    dim: int
    curvatures: np.ndarray | None = None
    wells: tuple[Well, ...] | None = None
    offset: float = 0.0


def quadratic(curvatures) -> LandscapeSpec:
    """Loss 0.5 * sum(a_i * w_i^2) with strictly positive diagonal curvature."""
    a = np.asarray(curvatures, dtype=np.float64).ravel()
    if a.size == 0 or np.any(a <= 0):
        raise ValueError("curvatures must be a non-empty, strictly positive vector")
    return LandscapeSpec(kind=QUADRATIC, dim=a.size, curvatures=a)


def _well_pull(wells: tuple[Well, ...], w: np.ndarray) -> float:
    pull = 0.0
    for well in wells:
        r2 = float(np.sum((w - well.center) ** 2))
        pull += well.depth * np.exp(-r2 / (2.0 * well.width ** 2))
    return pull


def gaussian_wells(wells) -> LandscapeSpec:
    """Sum of negative Gaussian wells, shifted so the minimum sits near zero.

    The shift equals the strongest total pull over the well centers, which is
    where the global minimum (approximately) lives for separated wells.
    """
    wells = tuple(wells)
    if not wells:
        raise ValueError("need at least one well")
    dim = wells[0].center.size
    if any(w.center.size != dim for w in wells):
        raise ValueError("all well centers must share one dimension")
    offset = max(_well_pull(wells, w.center) for w in wells)
    return LandscapeSpec(kind=GAUSSIAN_WELLS, dim=dim, wells=wells, offset=offset)


def make_double_well(
    sharp_width: float,
    flat_width: float,
    separation: float,
    depths: tuple[float, float] = (1.0, 1.0),
    dim: int = 2,
) -> LandscapeSpec:
    """Sharp-versus-flat two-basin fixture.

    The flat well sits at the origin and the sharp one at ``separation``
    along the first axis (wells[0] is the sharp one). Because curvature at a
    well center scales as depth / width^2, the sharp basin has the larger
    local Hessian trace whenever ``sharp_width < flat_width`` at comparable
    depths.
    """
    if not (sharp_width > 0 and flat_width > 0):
        raise ValueError("widths must be > 0")
    if not sharp_width < flat_width:
        raise ValueError("sharp_width must be strictly below flat_width")
    if not separation > 0:
        raise ValueError("separation must be > 0")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    sharp_center = np.zeros(dim)
    sharp_center[0] = separation
    sharp = Well(sharp_center, depths[0], sharp_width)
    flat = Well(np.zeros(dim), depths[1], flat_width)
    return gaussian_wells((sharp, flat))


def landscape_eval(spec: LandscapeSpec, w) -> tuple[float, np.ndarray, float]:
    """Loss, gradient and exact Hessian trace at ``w``."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size != spec.dim:
        raise ValueError(f"point has dimension {w.size}, landscape expects {spec.dim}")
    if spec.kind == QUADRATIC:
        a = spec.curvatures
        loss = 0.5 * float(a @ (w * w))
        grad = a * w
        trace = float(np.sum(a))
        return loss, grad, trace
    loss = spec.offset
    grad = np.zeros_like(w)
    trace = 0.0
    for well in spec.wells:
        delta = w - well.center
        r2 = float(delta @ delta)
        s2 = well.width ** 2
        e = well.depth * np.exp(-r2 / (2.0 * s2))
        loss -= e
        grad += e * delta / s2
        trace += e * (spec.dim / s2 - r2 / (s2 * s2))
    return float(loss), grad, float(trace)


def landscape_loss(spec: LandscapeSpec):
    """Scalar loss callable over a single point."""

    def fn(w):
        return landscape_eval(spec, w)[0]

    return fn


def landscape_batch_loss(spec: LandscapeSpec):
    """Vectorized loss over a (n, dim) batch of points; used by Monte Carlo checks."""

    if spec.kind == QUADRATIC:
        a = spec.curvatures

        def fn(points: np.ndarray) -> np.ndarray:
            points = np.asarray(points, dtype=np.float64)
            return 0.5 * (points * points) @ a

        return fn

    wells, offset = spec.wells, spec.offset

    def fn(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        total = np.full(points.shape[0], offset, dtype=np.float64)
        for well in wells:
            delta = points - well.center
            r2 = np.einsum("ij,ij->i", delta, delta)
            total -= well.depth * np.exp(-r2 / (2.0 * well.width ** 2))
        return total

    return fn
