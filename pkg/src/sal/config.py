"""Hyperparameters of the stress-aware control loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields


@dataclass
class SalConfig:
    """Everything the controller needs to turn epoch metrics into interventions.

    Thresholds split training into regimes: below ``noise_threshold`` nothing
    happens, above it scaled Gaussian noise is injected, and at
    ``yield_threshold`` the tail layers are plastically deformed and the
    stress resets to zero. ``revert_*`` governs the snapshot-based recovery
    path after a deformation that made things worse.
    """

    stress_decay: float = 5e-4          # subtracted per improving epoch
    stress_growth: float = 5e-3         # added per stagnant epoch
    min_loss_drop: float = 1e-4         # smallest loss improvement that counts
    min_accuracy_gain: float = 1e-4     # smallest accuracy improvement that counts
    noise_threshold: float = 5e-3       # stress level that switches noise on
    yield_threshold: float = 1e-2       # stress level that triggers deformation
    base_noise: float = 1e-7            # noise floor once past the threshold
    stress_noise_gain: float = 1e-5     # extra noise per unit of stress
    max_stress: float = 1.0             # stress is clamped to [0, max_stress]
    warmup_epochs: int = 15             # no interventions at or before this epoch
    plastic_layer_count: int = 3        # trailing trainable entries to deform
    plastic_retain: float = 0.9         # contraction factor during deformation
    plastic_noise: float = 0.02         # deformation noise parameter
    plastic_noise_is_std: bool = True   # False: treat plastic_noise as a variance
    accuracy_condition_enabled: bool = True  # require accuracy gains too
    revert_enabled: bool = True
    revert_tolerance: float = 0.05      # relative loss excess that triggers a revert
    revert_patience: int = 1            # epochs after deformation before judging it
    reset_optimizer_state: bool = False  # clear moment estimates after interventions

    def __post_init__(self) -> None:
        if self.stress_decay < 0:
            raise ValueError("stress_decay must be >= 0")
        if self.stress_growth < 0:
            raise ValueError("stress_growth must be >= 0")
        if self.min_loss_drop < 0 or self.min_accuracy_gain < 0:
            raise ValueError("improvement thresholds must be >= 0")
        if not self.max_stress > 0:
            raise ValueError("max_stress must be > 0")
        both_infinite = math.isinf(self.noise_threshold) and math.isinf(self.yield_threshold)
        if not (self.noise_threshold < self.yield_threshold or both_infinite):
            raise ValueError("noise_threshold must be strictly below yield_threshold")
        if math.isfinite(self.yield_threshold) and self.yield_threshold > self.max_stress:
            raise ValueError("yield_threshold cannot exceed max_stress")
        if self.base_noise < 0 or self.stress_noise_gain < 0:
            raise ValueError("noise magnitudes must be >= 0")
        if self.warmup_epochs < 0:
            raise ValueError("warmup_epochs must be >= 0")
        if self.plastic_layer_count < 1:
            raise ValueError("plastic_layer_count must be >= 1")
        if not 0 < self.plastic_retain <= 1:
            raise ValueError("plastic_retain must lie in (0, 1]")
        if self.plastic_noise < 0:
            raise ValueError("plastic_noise must be >= 0")
        if self.revert_tolerance < 0:
            raise ValueError("revert_tolerance must be >= 0")
        if self.revert_patience < 1:
            raise ValueError("revert_patience must be >= 1")

    def plastic_noise_std(self) -> float:
        """Standard deviation of the deformation noise."""
        if self.plastic_noise_is_std:
            return self.plastic_noise
        return math.sqrt(self.plastic_noise)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
