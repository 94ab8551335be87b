"""Parameter interventions driven by the stress level.

Two escalating moves, plus an undo: scaled Gaussian noise over every
trainable tensor, a contraction-plus-noise rewrite of the trailing trainable
entries, and a bitwise revert to the snapshot taken when the rewrite fired.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import SalConfig
from .errors import NonFiniteError
from .params import ParameterSet
from .stress import EpochMetrics

NOISE = "noise"
PLASTIC = "plastic"
REVERT = "revert"


@dataclass
class YieldSnapshot:
    """Full weight copy taken the moment a plastic deformation fires."""

    params: ParameterSet
    pre_event_loss: float
    event_epoch: int


@dataclass
class InterventionEvent:
    """One logged intervention, serialized as a JSON-lines record."""

    epoch: int
    kind: str
    sigma: float
    layers: list[str] = field(default_factory=list)
    stress_before: float = 0.0
    stress_after: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "kind": self.kind,
                "sigma": self.sigma,
                "layers": self.layers,
                "stress_before": self.stress_before,
                "stress_after": self.stress_after,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "InterventionEvent":
        d = json.loads(line)
        return cls(
            epoch=int(d["epoch"]),
            kind=str(d["kind"]),
            sigma=float(d["sigma"]),
            layers=list(d["layers"]),
            stress_before=float(d["stress_before"]),
            stress_after=float(d["stress_after"]),
        )


def noise_scale(stress: float, cfg: SalConfig) -> float:
    """Noise standard deviation for the given stress level.

    The base magnitude grows linearly with stress and is additionally ramped
    in smoothly: the full magnitude only applies once the stress reaches the
    yield threshold.
    """
    if stress < 0:
        raise ValueError("stress must be >= 0")
    if not cfg.yield_threshold > 0:
        raise ValueError("yield_threshold must be > 0 to scale noise")
    ramp = min(1.0, stress / cfg.yield_threshold)
    return ramp * (cfg.base_noise + cfg.stress_noise_gain * stress)


def inject_noise(params: ParameterSet, sigma: float, rng: np.random.Generator) -> ParameterSet:
    """Add independent N(0, sigma^2) perturbations to every trainable element.

    Draws happen in collection order, one tensor at a time, so the result is
    reproducible for a given generator state. ``sigma == 0`` returns an
    untouched copy without consuming any randomness.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    out = params.copy()
    if sigma == 0.0:
        return out
    with np.errstate(over="ignore"):
        for p in out:
            if not p.trainable:
                continue
            p.values = p.values + sigma * rng.standard_normal(p.shape)
    try:
        out.validate_finite("noise injection")
    except NonFiniteError as exc:
        raise NonFiniteError(f"{exc} (sigma={sigma!r}; check the noise configuration)") from None
    return out


def plastic_target_names(params: ParameterSet, cfg: SalConfig) -> list[str]:
    """Names of the trailing trainable entries a deformation would touch."""
    trainable = params.trainable()
    if not trainable:
        raise ValueError("no trainable entries to deform")
    if len(trainable) < cfg.plastic_layer_count:
        warnings.warn(
            f"requested deformation of {cfg.plastic_layer_count} entries but only "
            f"{len(trainable)} are trainable; deforming all of them",
            stacklevel=3,
        )
        return [p.name for p in trainable]
    return [p.name for p in trainable[-cfg.plastic_layer_count:]]


def plastic_deform(
    params: ParameterSet,
    cfg: SalConfig,
    rng: np.random.Generator,
    *,
    pre_event_loss: float = math.inf,
    event_epoch: int = 0,
) -> tuple[ParameterSet, YieldSnapshot]:
    """Contract and renoise the trailing trainable entries.

    The snapshot of the untouched weights is taken first so a later revert can
    restore this exact state. Each targeted tensor becomes
    ``retain * w + noise`` while everything else is left bitwise intact.
    """
    targets = plastic_target_names(params, cfg)
    snapshot = YieldSnapshot(params.copy(), pre_event_loss, event_epoch)
    std = cfg.plastic_noise_std()
    out = params.copy()
    for name in targets:
        p = out[name]
        values = cfg.plastic_retain * p.values
        if std > 0.0:
            values = values + std * rng.standard_normal(p.shape)
        p.values = values
    out.validate_finite("plastic deformation")
    return out, snapshot


def should_revert(post: EpochMetrics, snapshot: YieldSnapshot, cfg: SalConfig) -> bool:
    """Has the deformation failed badly enough, and recently enough, to undo?

    Only meaningful once ``revert_patience`` epochs have elapsed since the
    deformation; before that the answer is always False.
    """
    if post.epoch <= snapshot.event_epoch:
        raise ValueError("recovery check requires metrics from after the deformation")
    if post.epoch - snapshot.event_epoch < cfg.revert_patience:
        return False
    return post.loss > snapshot.pre_event_loss * (1.0 + cfg.revert_tolerance)


def revert_to_yield(params: ParameterSet, snapshot: YieldSnapshot | None) -> ParameterSet:
    """Restore the exact weights saved in the snapshot."""
    if snapshot is None:
        raise ValueError("no yield snapshot available to revert to")
    if not params.same_structure(snapshot.params):
        raise ValueError("snapshot structure does not match the live parameters")
    return snapshot.params.copy()
