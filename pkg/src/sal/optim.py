"""First-order optimizers the control loop wraps.

Each optimizer keeps per-tensor slot arrays keyed by parameter name and
returns a fresh parameter collection from :meth:`step`. Hyperparameter
defaults follow the methods' original formulations.
"""
from __future__ import annotations

import numpy as np

from .errors import NonFiniteError
from .params import ParameterSet, zip_entries


class Optimizer:
    kind = ""

    def __init__(self, learning_rate: float):
        if not learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        self.learning_rate = float(learning_rate)
        self.step_count = 0
        self._slots: dict[str, dict[str, np.ndarray]] = {}

    def _slot(self, name: str, key: str, shape) -> np.ndarray:
        per_param = self._slots.setdefault(name, {})
        if key not in per_param:
            per_param[key] = np.zeros(shape, dtype=np.float64)
        return per_param[key]

    def reset_state(self) -> None:
        """Forget all moment estimates and the step counter."""
        self._slots.clear()
        self.step_count = 0

    def step(self, params: ParameterSet, grads: ParameterSet) -> ParameterSet:
        """One update over every trainable entry; returns new parameters."""
        for _, g in zip_entries(params, grads):
            if not np.all(np.isfinite(g.values)):
                raise NonFiniteError(f"gradient for {g.name!r} contains NaN or infinity")
        self.step_count += 1
        out = params.copy()
        for p, g in zip_entries(out, grads):
            if not p.trainable:
                continue
            p.values = self._update(p.name, p.values, g.values)
        return out

    def _update(self, name: str, w: np.ndarray, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Sgd(Optimizer):
    kind = "sgd"

    def __init__(self, learning_rate: float, momentum: float = 0.0):
        super().__init__(learning_rate)
        self.momentum = float(momentum)

    def _update(self, name, w, g):
        if self.momentum == 0.0:
            return w - self.learning_rate * g
        v = self._slot(name, "v", w.shape)
        v[...] = self.momentum * v + g
        return w - self.learning_rate * v


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1, self.beta2, self.epsilon = float(beta1), float(beta2), float(epsilon)

    def _update(self, name, w, g):
        t = self.step_count
        m = self._slot(name, "m", w.shape)
        v = self._slot(name, "v", w.shape)
        m[...] = self.beta1 * m + (1.0 - self.beta1) * g
        v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
        m_hat = m / (1.0 - self.beta1 ** t)
        v_hat = v / (1.0 - self.beta2 ** t)
        return w - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


class Adamax(Optimizer):
    kind = "adamax"

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1, self.beta2, self.epsilon = float(beta1), float(beta2), float(epsilon)

    def _update(self, name, w, g):
        t = self.step_count
        m = self._slot(name, "m", w.shape)
        u = self._slot(name, "u", w.shape)
        m[...] = self.beta1 * m + (1.0 - self.beta1) * g
        u[...] = np.maximum(self.beta2 * u, np.abs(g))
        return w - (self.learning_rate / (1.0 - self.beta1 ** t)) * m / (u + self.epsilon)


class Nadam(Optimizer):
    """Adam with a bias-corrected Nesterov lookahead on the first moment."""

    kind = "nadam"

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1, self.beta2, self.epsilon = float(beta1), float(beta2), float(epsilon)

    def _update(self, name, w, g):
        t = self.step_count
        m = self._slot(name, "m", w.shape)
        v = self._slot(name, "v", w.shape)
        m[...] = self.beta1 * m + (1.0 - self.beta1) * g
        v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
        m_hat = m / (1.0 - self.beta1 ** (t + 1))
        g_hat = g / (1.0 - self.beta1 ** t)
        v_hat = v / (1.0 - self.beta2 ** t)
        direction = self.beta1 * m_hat + (1.0 - self.beta1) * g_hat
        return w - self.learning_rate * direction / (np.sqrt(v_hat) + self.epsilon)


class RmsProp(Optimizer):
    kind = "rmsprop"

    def __init__(self, learning_rate: float, rho: float = 0.9, epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.rho, self.epsilon = float(rho), float(epsilon)

    def _update(self, name, w, g):
        v = self._slot(name, "v", w.shape)
        v[...] = self.rho * v + (1.0 - self.rho) * g * g
        return w - self.learning_rate * g / (np.sqrt(v) + self.epsilon)


_KINDS = {cls.kind: cls for cls in (Sgd, Adam, Adamax, Nadam, RmsProp)}


def make_optimizer(kind: str, learning_rate: float, **hyper) -> Optimizer:
    """Build an optimizer by name; unknown hyperparameters are rejected."""
    if kind not in _KINDS:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {sorted(_KINDS)}")
    try:
        return _KINDS[kind](learning_rate, **hyper)
    except TypeError as exc:
        raise ValueError(f"bad hyperparameters for {kind}: {exc}") from None


class SalWrappedOptimizer:
    """Composite of a base optimizer and the epoch-boundary controller.

    Mini-batch steps pass straight through to the base optimizer, so with the
    controller disabled the trajectory is bitwise identical to running the
    optimizer bare.
    """

    def __init__(self, optimizer: Optimizer, controller):
        self.optimizer = optimizer
        self.controller = controller

    def batch_step(self, params: ParameterSet, grads: ParameterSet) -> ParameterSet:
        return self.optimizer.step(params, grads)

    def end_epoch(self, params: ParameterSet, metrics) -> ParameterSet:
        return self.controller.end_of_epoch(params, metrics, optimizer=self.optimizer)


def wrap_with_sal(optimizer: Optimizer, controller) -> SalWrappedOptimizer:
    return SalWrappedOptimizer(optimizer, controller)
