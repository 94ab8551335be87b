"""Stress-aware MLP classifier with the scikit-learn estimator contract.

The heavy lifting lives in the harness; this wrapper exists so the training
control composes with pipelines, grid search and anything else that speaks
``fit``/``predict``/``get_params``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import rng as rngmod
from .config import SalConfig
from .control import SalController
from .nn import MlpSpec, forward, init_mlp, loss_and_grad
from .optim import make_optimizer, wrap_with_sal
from .stress import EpochMetrics
from .validation import as_label_vector, as_sample_matrix, check_feature_count


class SalMlpClassifier(ClassifierMixin, BaseEstimator):
    """Dense softmax classifier trained under stress-aware control.

    With ``sal_enabled=False`` this is a plain mini-batch MLP; with it on, the
    per-epoch stress signal drives noise injection and plastic deformation
    exactly as in the experiment harness.

    Parameters mirror scikit-learn conventions and are stored untouched, so
    ``clone`` and grid search work as expected. Fitted state lives in the
    underscore attributes: ``classes_``, ``params_``, ``history_``,
    ``events_``, ``stress_trace_``.
    """

    def __init__(
        self,
        hidden_layer_sizes=(16, 16),
        activation="relu",
        optimizer="adam",
        learning_rate=1e-3,
        epochs=50,
        batch_size=64,
        sal_enabled=True,
        sal_config=None,
        seed=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.sal_enabled = sal_enabled
        self.sal_config = sal_config
        self.seed = seed

    def fit(self, X, y):
        X = as_sample_matrix(X)
        y = as_label_vector(y, X.shape[0])
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("need at least two classes")
        self.n_features_in_ = X.shape[1]

        sal_cfg = self.sal_config if self.sal_config is not None else SalConfig()
        spec = MlpSpec(
            widths=(X.shape[1], *tuple(int(h) for h in self.hidden_layer_sizes), self.classes_.size),
            activation=self.activation,
            output="softmax",
            seed=self.seed,
        )
        optimizer = make_optimizer(self.optimizer, learning_rate=self.learning_rate)
        controller = SalController(
            sal_cfg,
            noise_rng=rngmod.substream(self.seed, rngmod.STREAM_NOISE),
            plastic_rng=rngmod.substream(self.seed, rngmod.STREAM_PLASTIC),
            enabled=self.sal_enabled,
        )
        wrapped = wrap_with_sal(optimizer, controller)
        data_rng = rngmod.substream(self.seed, rngmod.STREAM_DATA_ORDER)

        params = init_mlp(spec)
        n = X.shape[0]
        history = []
        for epoch in range(1, self.epochs + 1):
            order = data_rng.permutation(n)
            batch_losses, correct = [], 0
            for lo in range(0, n, self.batch_size):
                idx = order[lo:lo + self.batch_size]
                loss, grads, preds = loss_and_grad(
                    params, spec, X[idx], encoded[idx], return_predictions=True
                )
                batch_losses.append(loss)
                correct += int(np.sum(np.argmax(preds, axis=1) == encoded[idx]))
                params = wrapped.batch_step(params, grads)
            metrics = EpochMetrics(
                loss=float(np.mean(batch_losses)), accuracy=correct / n, epoch=epoch
            )
            params = wrapped.end_epoch(params, metrics)
            history.append(
                {
                    "epoch": epoch,
                    "loss": metrics.loss,
                    "accuracy": metrics.accuracy,
                    "stress": controller.state.value,
                }
            )

        self.mlp_spec_ = spec
        self.params_ = params
        self.history_ = history
        self.events_ = list(controller.events)
        self.stress_trace_ = np.asarray([h["stress"] for h in history])
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this SalMlpClassifier instance is not fitted yet")

    def predict_proba(self, X):
        self._check_fitted()
        X = as_sample_matrix(X)
        check_feature_count(X, self.n_features_in_)
        probs, _ = forward(self.params_, self.mlp_spec_, X)
        return probs

    def predict(self, X):
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]
