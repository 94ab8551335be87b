"""Epoch-boundary control loop: stress accounting plus interventions.

The controller sits between the optimizer and the training loop. Mini-batch
steps never see it; once per epoch it receives the finished metrics and the
live parameters, updates the stress signal, and applies whatever the current
regime calls for, in a fixed order: recovery check, then noise, then plastic
deformation (noise and deformation may both fire in the same epoch).
"""
from __future__ import annotations

import numpy as np

from .config import SalConfig
from .params import ParameterSet
from .perturb import (
    NOISE,
    PLASTIC,
    REVERT,
    InterventionEvent,
    YieldSnapshot,
    inject_noise,
    noise_scale,
    plastic_deform,
    plastic_target_names,
    revert_to_yield,
    should_revert,
)
from .stress import EpochMetrics, Regime, StressState, classify_regime, is_improvement, reset_stress, update_stress


class SalController:
    """Owns the stress state, the yield snapshot and the event log for one run."""

    def __init__(
        self,
        cfg: SalConfig,
        *,
        noise_rng: np.random.Generator,
        plastic_rng: np.random.Generator,
        enabled: bool = True,
    ):
        self.cfg = cfg
        self.enabled = enabled
        self.noise_rng = noise_rng
        self.plastic_rng = plastic_rng
        self.state = StressState(0.0, cfg.max_stress, 0)
        self.prev_metrics: EpochMetrics | None = None
        self.snapshot: YieldSnapshot | None = None
        self.events: list[InterventionEvent] = []

    def end_of_epoch(self, params: ParameterSet, metrics: EpochMetrics, optimizer=None) -> ParameterSet:
        """Run the per-epoch control step and return the (possibly new) parameters."""
        if not self.enabled:
            return params
        improved = self._improved(metrics)
        self.state = update_stress(self.state, improved, self.cfg)
        regime = classify_regime(self.state, metrics.epoch, self.cfg)
        if regime is not Regime.WARMUP:
            params = self._recovery_check(params, metrics, optimizer)
            if regime in (Regime.NOISE_ZONE, Regime.PLASTIC_ZONE):
                params = self._apply_noise(params, metrics)
            if regime is Regime.PLASTIC_ZONE:
                params = self._apply_plastic(params, metrics, optimizer)
        self.prev_metrics = metrics
        return params

    # -- individual moves ------------------------------------------------

    def _improved(self, metrics: EpochMetrics) -> bool:
        if self.prev_metrics is None:
            # First epoch: previous loss counts as infinite, previous accuracy as 0.
            if not self.cfg.accuracy_condition_enabled:
                return True
            return metrics.accuracy - 0.0 > self.cfg.min_accuracy_gain
        return is_improvement(metrics, self.prev_metrics, self.cfg)

    def _recovery_check(self, params: ParameterSet, metrics: EpochMetrics, optimizer) -> ParameterSet:
        """Judge the most recent deformation once its patience window elapses.

        The snapshot is consumed either way: a failed deformation is undone,
        a tolerated one is accepted and its snapshot discarded.
        """
        if self.snapshot is None or not self.cfg.revert_enabled:
            return params
        if metrics.epoch - self.snapshot.event_epoch < self.cfg.revert_patience:
            return params
        if should_revert(metrics, self.snapshot, self.cfg):
            params = revert_to_yield(params, self.snapshot)
            self.events.append(
                InterventionEvent(
                    epoch=metrics.epoch,
                    kind=REVERT,
                    sigma=0.0,
                    layers=[p.name for p in params],
                    stress_before=self.state.value,
                    stress_after=self.state.value,
                )
            )
            if self.cfg.reset_optimizer_state and optimizer is not None:
                optimizer.reset_state()
        self.snapshot = None
        return params

    def _apply_noise(self, params: ParameterSet, metrics: EpochMetrics) -> ParameterSet:
        stress = self.state.value
        sigma = noise_scale(stress, self.cfg)
        params = inject_noise(params, sigma, self.noise_rng)
        self.events.append(
            InterventionEvent(
                epoch=metrics.epoch,
                kind=NOISE,
                sigma=sigma,
                layers=[p.name for p in params.trainable()],
                stress_before=stress,
                stress_after=stress,
            )
        )
        return params

    def _apply_plastic(self, params: ParameterSet, metrics: EpochMetrics, optimizer) -> ParameterSet:
        stress_before = self.state.value
        targets = plastic_target_names(params, self.cfg)
        params, self.snapshot = plastic_deform(
            params,
            self.cfg,
            self.plastic_rng,
            pre_event_loss=metrics.loss,
            event_epoch=metrics.epoch,
        )
        self.state = reset_stress(self.state)
        self.events.append(
            InterventionEvent(
                epoch=metrics.epoch,
                kind=PLASTIC,
                sigma=self.cfg.plastic_noise_std(),
                layers=targets,
                stress_before=stress_before,
                stress_after=0.0,
            )
        )
        if self.cfg.reset_optimizer_state and optimizer is not None:
            optimizer.reset_state()
        return params


def reconstruct_stress_trace(improved_flags: list[bool], cfg: SalConfig) -> list[float]:
    """Replay the stress recurrence over a run's improvement flags.

    Returns the end-of-epoch stress values, including the deterministic reset
    whenever a post-warmup epoch reaches the yield threshold. A logged run's
    stress column must match this replay exactly.
    """
    state = StressState(0.0, cfg.max_stress, 0)
    trace = []
    for i, improved in enumerate(improved_flags):
        epoch = i + 1
        state = update_stress(state, improved, cfg)
        if classify_regime(state, epoch, cfg) is Regime.PLASTIC_ZONE:
            state = reset_stress(state)
        trace.append(state.value)
    return trace
