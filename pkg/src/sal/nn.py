"""Minimal dense network: forward pass, losses, manual backprop.

Small by design. Double precision throughout, because the injected noise
levels (1e-7 and below) sit under single-precision resolution of typical
weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError
from .params import Param, ParameterSet

_ACTIVATIONS = ("relu", "tanh")
_OUTPUTS = ("softmax", "identity")
_LOSSES = ("cross_entropy", "mse")


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths plus the nonlinearities of a fully connected network.

    ``widths`` runs input to output, so ``(2, 16, 16, 2)`` is a two-hidden-
    layer classifier over two features.
    """

    widths: tuple[int, ...]
    activation: str = "relu"
    output: str = "softmax"
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("need at least an input and an output width")
        if any(w < 1 for w in self.widths):
            raise ValueError("all widths must be >= 1")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")
        if self.output not in _OUTPUTS:
            raise ValueError(f"output must be one of {_OUTPUTS}")

    @property
    def layer_count(self) -> int:
        return len(self.widths) - 1


@dataclass
class ForwardCache:
    """Per-layer pre-activations and activations kept for the backward pass."""

    inputs: np.ndarray
    pre_activations: list[np.ndarray] = field(default_factory=list)
    activations: list[np.ndarray] = field(default_factory=list)


def init_mlp(spec: MlpSpec, rng: np.random.Generator | None = None) -> ParameterSet:
    """Fresh weights: fan-in scaled normals for kernels, zeros for biases.

    Deterministic for a given ``spec.seed`` unless an explicit generator is
    supplied.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    entries = []
    for i in range(spec.layer_count):
        fan_in, fan_out = spec.widths[i], spec.widths[i + 1]
        weight = rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)
        entries.append(Param(f"layer{i}.weight", weight))
        entries.append(Param(f"layer{i}.bias", np.zeros(fan_out)))
    return ParameterSet(entries)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    return 1.0 - a * a


def _check_inputs(spec: MlpSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"inputs must be 2-D (batch, features), got shape {x.shape}")
    if x.shape[1] != spec.widths[0]:
        raise ValueError(f"inputs have {x.shape[1]} features but the network expects {spec.widths[0]}")
    return x


def _logits(params: ParameterSet, spec: MlpSpec, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    cache = ForwardCache(inputs=x)
    h = x
    for i in range(spec.layer_count):
        w = params[f"layer{i}.weight"].values
        b = params[f"layer{i}.bias"].values
        z = h @ w + b
        cache.pre_activations.append(z)
        if i < spec.layer_count - 1:
            h = _activate(z, spec.activation)
        else:
            h = z
        cache.activations.append(h)
    return h, cache


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: ParameterSet, spec: MlpSpec, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the network over a batch; softmax outputs are row-normalized probabilities."""
    x = _check_inputs(spec, x)
    z, cache = _logits(params, spec, x)
    out = _softmax(z) if spec.output == "softmax" else z
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("forward pass produced non-finite predictions")
    return out, cache


def loss_and_grad(
    params: ParameterSet,
    spec: MlpSpec,
    x: np.ndarray,
    y: np.ndarray,
    loss: str = "cross_entropy",
    return_predictions: bool = False,
):
    """Batch-mean loss and its gradient with respect to every parameter.

    Cross-entropy pairs with softmax output and integer class labels and is
    computed on the log-sum-exp path so large logits cannot overflow. Mean
    squared error pairs with identity output and float targets; the mean runs
    over every output element.
    """
    if loss not in _LOSSES:
        raise ValueError(f"loss must be one of {_LOSSES}")
    x = _check_inputs(spec, x)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    z, cache = _logits(params, spec, x)

    if loss == "cross_entropy":
        if spec.output != "softmax":
            raise ValueError("cross_entropy requires a softmax output layer")
        labels = np.asarray(y)
        if labels.shape != (n,):
            raise ValueError(f"labels must be a vector of {n} class indices")
        labels = labels.astype(np.int64)
        k = spec.widths[-1]
        if labels.min() < 0 or labels.max() >= k:
            raise ValueError(f"labels must lie in [0, {k})")
        zmax = z.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
        value = float(np.mean(lse - z[np.arange(n), labels]))
        probs = _softmax(z)
        dz = probs.copy()
        dz[np.arange(n), labels] -= 1.0
        dz /= n
        predictions = probs
    else:
        if spec.output != "identity":
            raise ValueError("mse requires an identity output layer")
        targets = np.asarray(y, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets[:, None]
        if targets.shape != z.shape:
            raise ValueError(f"targets of shape {targets.shape} do not match outputs {z.shape}")
        diff = z - targets
        value = float(np.mean(diff * diff))
        dz = (2.0 / diff.size) * diff
        predictions = z

    if not np.isfinite(value):
        raise NonFiniteError("loss is non-finite")

    grads = []
    for i in reversed(range(spec.layer_count)):
        a_prev = cache.inputs if i == 0 else cache.activations[i - 1]
        dw = a_prev.T @ dz
        db = dz.sum(axis=0)
        grads.append(Param(f"layer{i}.bias", db))
        grads.append(Param(f"layer{i}.weight", dw))
        if i > 0:
            da = dz @ params[f"layer{i}.weight"].values.T
            dz = da * _activate_grad(cache.pre_activations[i - 1], cache.activations[i - 1], spec.activation)
    grad_set = ParameterSet(reversed(grads))

    if return_predictions:
        return value, grad_set, predictions
    return value, grad_set


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax matches the label (ties go to the lowest index)."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.ndim != 2:
        raise ValueError("predictions must be 2-D (batch, classes)")
    if predictions.shape[0] != labels.shape[0]:
        raise ValueError("predictions and labels disagree on batch size")
    if predictions.shape[0] == 0:
        raise ValueError("empty batch")
    return float(np.mean(np.argmax(predictions, axis=1) == labels))
