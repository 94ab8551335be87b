"""The global stress signal: accumulation, decay and regime classification.

Stress is a single scalar in ``[0, max]``. Each epoch it either decays by a
fixed amount (the epoch improved) or grows by another (it stagnated), and the
current level decides whether training is left alone, nudged with noise, or
plastically deformed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .config import SalConfig


class Regime(str, Enum):
    WARMUP = "warmup"
    ELASTIC = "elastic"
    NOISE_ZONE = "noise"
    PLASTIC_ZONE = "plastic"


@dataclass(frozen=True)
class EpochMetrics:
    """Mean loss and accuracy of one finished epoch."""

    loss: float
    accuracy: float
    epoch: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.loss):
            raise ValueError(f"epoch {self.epoch}: loss must be finite, got {self.loss}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"epoch {self.epoch}: accuracy must lie in [0, 1], got {self.accuracy}")
        if self.epoch < 1:
            raise ValueError("epoch numbering starts at 1")


@dataclass(frozen=True)
class StressState:
    """Current stress level plus bookkeeping.

    ``value`` only changes through :func:`update_stress` and
    :func:`reset_stress`; everything else treats the state as read-only.
    """

    value: float = 0.0
    max_value: float = 1.0
    last_update_epoch: int = 0

    def __post_init__(self) -> None:
        if not self.max_value > 0:
            raise ValueError("max_value must be > 0")
        if not 0.0 <= self.value <= self.max_value:
            raise ValueError(f"stress {self.value} outside [0, {self.max_value}]")


def is_improvement(curr: EpochMetrics, prev: EpochMetrics, cfg: SalConfig) -> bool:
    """Did ``curr`` improve on ``prev`` by more than the configured margins?

    The loss must drop by more than ``min_loss_drop``; when the accuracy
    condition is enabled the accuracy must additionally rise by more than
    ``min_accuracy_gain``. Both comparisons are strict.
    """
    if prev.epoch >= curr.epoch:
        raise ValueError(f"metrics out of order: epoch {prev.epoch} !< {curr.epoch}")
    loss_ok = prev.loss - curr.loss > cfg.min_loss_drop
    if not cfg.accuracy_condition_enabled:
        return loss_ok
    return loss_ok and (curr.accuracy - prev.accuracy > cfg.min_accuracy_gain)


def update_stress(state: StressState, improved: bool, cfg: SalConfig) -> StressState:
    """Apply one clamped decay-or-growth step to the stress level."""
    if improved:
        value = max(0.0, state.value - cfg.stress_decay)
    else:
        value = min(state.max_value, state.value + cfg.stress_growth)
    return replace(state, value=value, last_update_epoch=state.last_update_epoch + 1)


def reset_stress(state: StressState) -> StressState:
    """Drop the stress to zero (performed after a plastic deformation)."""
    return replace(state, value=0.0)


def classify_regime(state: StressState, epoch: int, cfg: SalConfig) -> Regime:
    """Which intervention regime applies at ``epoch`` with the given stress.

    Warm-up takes precedence over everything; after it the comparison against
    the yield threshold is inclusive while the noise threshold is strict.
    """
    if epoch < 1:
        raise ValueError("epoch numbering starts at 1")
    if epoch <= cfg.warmup_epochs:
        return Regime.WARMUP
    if state.value >= cfg.yield_threshold:
        return Regime.PLASTIC_ZONE
    if state.value > cfg.noise_threshold:
        return Regime.NOISE_ZONE
    return Regime.ELASTIC
