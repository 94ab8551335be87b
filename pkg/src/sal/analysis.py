"""Quantitative lenses on a run: sharpness, curvature, surfaces, trajectories.

Two sharpness measures are kept deliberately separate: the cheap gradient-norm
proxy logged every epoch, and randomized Hessian-trace estimates used by the
flatness checks. They answer different questions and are never mixed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError
from .params import ParameterSet


def grad_norm_sharpness(grad) -> float:
    """Euclidean norm of the full flattened gradient."""
    if isinstance(grad, ParameterSet):
        flat = grad.to_vector(trainable_only=True)
    else:
        flat = np.asarray(grad, dtype=np.float64).ravel()
    if not np.all(np.isfinite(flat)):
        raise NonFiniteError("gradient contains non-finite values")
    return float(np.linalg.norm(flat))


def hvp_from_grad(grad_fn, w: np.ndarray, step: float = 1e-4):
    """Hessian-vector products by central differences of a gradient function."""
    if not step > 0:
        raise ValueError("step must be > 0")
    w = np.asarray(w, dtype=np.float64)

    def hvp(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        return (grad_fn(w + step * v) - grad_fn(w - step * v)) / (2.0 * step)

    return hvp


def hutchinson_trace(hvp, dim: int, n_probes: int, rng: np.random.Generator) -> float:
    """Randomized trace estimate: mean of z' (H z) over sign-vector probes z."""
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    total = 0.0
    for _ in range(n_probes):
        z = rng.integers(0, 2, size=dim).astype(np.float64) * 2.0 - 1.0
        hz = np.asarray(hvp(z), dtype=np.float64)
        if not np.all(np.isfinite(hz)):
            raise NonFiniteError("Hessian-vector product is non-finite")
        total += float(z @ hz)
    return total / n_probes


def expected_loss_under_noise(
    loss_fn,
    w: np.ndarray,
    sigma: float,
    n_samples: int,
    rng: np.random.Generator,
    batch_loss_fn=None,
) -> tuple[float, float]:
    """Monte Carlo mean of loss(w + sigma * z) with z standard normal.

    Returns (mean, standard error). Samples are reduced in a fixed order so
    repeated runs with the same generator are bitwise identical. Passing
    ``batch_loss_fn`` (mapping an (n, d) matrix to n losses) avoids the
    Python-level loop.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    w = np.asarray(w, dtype=np.float64)
    if sigma == 0.0:
        return float(loss_fn(w)), 0.0
    draws = w + sigma * rng.standard_normal((n_samples, w.size))
    if batch_loss_fn is not None:
        values = np.asarray(batch_loss_fn(draws), dtype=np.float64)
    else:
        values = np.fromiter((loss_fn(row) for row in draws), dtype=np.float64, count=n_samples)
    mean = float(np.mean(values))
    if n_samples == 1:
        return mean, 0.0
    std_error = float(np.std(values, ddof=1) / np.sqrt(n_samples))
    return mean, std_error


@dataclass
class SurfaceGrid:
    """Loss values over a plane spanned by two orthonormal directions."""

    center: np.ndarray
    directions: np.ndarray      # (2, dim), rows orthonormal
    half_range: float
    offsets: np.ndarray         # (steps,), symmetric around 0
    values: np.ndarray          # (steps, steps)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("alpha,beta,loss\n")
            for i, a in enumerate(self.offsets):
                for j, b in enumerate(self.offsets):
                    fh.write(f"{float(a)!r},{float(b)!r},{float(self.values[i, j])!r}\n")


def surface_grid(loss_fn, center: np.ndarray, seed: int, half_range: float, steps: int) -> SurfaceGrid:
    """Sample the loss on a plane through ``center``.

    Directions are drawn from the seed and orthonormalized; an odd step count
    keeps the center itself on the grid.
    """
    if steps < 3 or steps % 2 == 0:
        raise ValueError("steps must be an odd number >= 3")
    if not half_range > 0:
        raise ValueError("half_range must be > 0")
    center = np.asarray(center, dtype=np.float64).ravel()
    rng = np.random.default_rng(seed)
    d1 = rng.standard_normal(center.size)
    d2 = rng.standard_normal(center.size)
    d1 /= np.linalg.norm(d1)
    d2 -= (d2 @ d1) * d1
    d2 -= (d2 @ d1) * d1  # second pass keeps orthogonality at round-off level
    d2 /= np.linalg.norm(d2)
    offsets = np.linspace(-half_range, half_range, steps)
    values = np.empty((steps, steps), dtype=np.float64)
    for i, a in enumerate(offsets):
        for j, b in enumerate(offsets):
            values[i, j] = loss_fn(center + a * d1 + b * d2)
    return SurfaceGrid(center=center.copy(), directions=np.vstack([d1, d2]),
                       half_range=float(half_range), offsets=offsets, values=values)


@dataclass
class PcaResult:
    projections: np.ndarray              # (n, k)
    components: np.ndarray               # (k, dim)
    explained_variance_ratio: np.ndarray  # (k,)
    rank_deficient: bool = False


def pca_project(snapshots, k: int = 3) -> PcaResult:
    """Project weight snapshots onto their top-k principal directions.

    Directions come from power iteration with deflation on the centered data;
    if the data has fewer than ``k`` significant directions the result is
    truncated and flagged. Component signs are fixed so the largest-magnitude
    coordinate is positive.
    """
    x = np.asarray(snapshots, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("snapshots must form an (n, dim) matrix")
    n = x.shape[0]
    if n < k + 1:
        raise ValueError(f"need at least {k + 1} snapshots for {k} components")
    centered = x - x.mean(axis=0)
    denom = n - 1
    total_variance = float(np.sum(centered * centered)) / denom
    if total_variance == 0.0:
        return PcaResult(np.zeros((n, 0)), np.zeros((0, x.shape[1])), np.zeros(0), True)

    rng = np.random.default_rng(0x5A1)  # fixed start: the routine takes no seed
    components: list[np.ndarray] = []
    eigenvalues: list[float] = []

    def matvec(v: np.ndarray) -> np.ndarray:
        out = centered.T @ (centered @ v) / denom
        for lam, comp in zip(eigenvalues, components):
            out -= lam * (comp @ v) * comp
        return out

    for _ in range(k):
        v = rng.standard_normal(x.shape[1])
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(5000):
            nxt = matvec(v)
            norm = np.linalg.norm(nxt)
            if norm <= 1e-14 * max(total_variance, 1.0):
                lam = 0.0
                break
            nxt /= norm
            if np.linalg.norm(nxt - v) < 1e-13 or np.linalg.norm(nxt + v) < 1e-13:
                v = nxt
                lam = float(v @ matvec(v))
                break
            v = nxt
        else:
            lam = float(v @ matvec(v))
        if lam <= 1e-12 * total_variance:
            break
        idx = int(np.argmax(np.abs(v)))
        if v[idx] < 0:
            v = -v
        components.append(v)
        eigenvalues.append(lam)

    comp = np.vstack(components) if components else np.zeros((0, x.shape[1]))
    ratios = np.asarray(eigenvalues) / total_variance if eigenvalues else np.zeros(0)
    return PcaResult(
        projections=centered @ comp.T,
        components=comp,
        explained_variance_ratio=ratios,
        rank_deficient=len(components) < k,
    )


def stress_histogram(values, bin_count: int, max_stress: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width histogram of a stress trace over [0, max_stress].

    Returns (edges, counts); counts always sum to the number of epochs.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 1:
        raise ValueError("need at least one stress value")
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    if values.min() < 0 or values.max() > max_stress:
        raise ValueError(f"stress values outside [0, {max_stress}]")
    counts, edges = np.histogram(values, bins=bin_count, range=(0.0, max_stress))
    return edges, counts


def write_histogram_csv(edges: np.ndarray, counts: np.ndarray, path) -> None:
    """Write histogram bins as CSV: one row per bin with its edges and count."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin_low,bin_high,count\n")
        for low, high, count in zip(edges[:-1], edges[1:], counts):
            fh.write(f"{float(low)!r},{float(high)!r},{int(count)}\n")
