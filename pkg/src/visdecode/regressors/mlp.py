"""One-hidden-layer sigmoid MLP trained with mini-batch Adam on a squared-error loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit

from ._base import MultiOutputRegressor, TrainingError

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


class MlpParams(NamedTuple):
    W1: np.ndarray  # (hidden, D)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (L, hidden)
    b2: np.ndarray  # (L,)


class ForwardCache(NamedTuple):
    inputs: np.ndarray  # inputs after dropout scaling
    hidden: np.ndarray
    output: np.ndarray


@dataclass
class AdamState:
    m: tuple
    v: tuple
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls(
            m=tuple(np.zeros_like(p) for p in params),
            v=tuple(np.zeros_like(p) for p in params),
        )


def init_params(rng: np.random.Generator, n_in, n_hidden, n_out) -> MlpParams:
    """Glorot-uniform weights, zero biases."""

    def glorot(fan_out, fan_in):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))

    W1 = glorot(n_hidden, n_in)
    W2 = glorot(n_out, n_hidden)
    return MlpParams(W1, np.zeros(n_hidden), W2, np.zeros(n_out))


def mlp_forward(p: MlpParams, X, dropout_mask: Optional[np.ndarray] = None, rate=0.0):
    """Forward pass for a single vector or a batch of rows.

    ``dropout_mask`` is a boolean keep-mask over the inputs; kept inputs are
    scaled by ``1 / (1 - rate)`` (inverted dropout). Without a mask the
    pass is the plain inference pass.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if dropout_mask is not None:
        X = X * np.atleast_2d(dropout_mask) / (1.0 - rate)
    H = expit(X @ p.W1.T + p.b1)
    out = H @ p.W2.T + p.b2
    cache = ForwardCache(X, H, out)
    return (out[0] if single else out), cache


def mlp_loss(out, Y) -> float:
    """Batch mean of ``0.5 * ||out - y||^2``."""
    out, Y = np.atleast_2d(out), np.atleast_2d(Y)
    return 0.5 * float(np.sum((out - Y) ** 2)) / out.shape[0]


def mlp_backward(p: MlpParams, Y, cache: ForwardCache) -> MlpParams:
    """Exact gradients of :func:`mlp_loss` with respect to every parameter."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = Y.shape[0]
    d_out = (cache.output - Y) / n
    gW2 = d_out.T @ cache.hidden
    gb2 = d_out.sum(axis=0)
    d_hidden = (d_out @ p.W2) * cache.hidden * (1.0 - cache.hidden)
    gW1 = d_hidden.T @ cache.inputs
    gb1 = d_hidden.sum(axis=0)
    return MlpParams(gW1, gb1, gW2, gb2)


def adam_step(params, grads, state: AdamState, lr=0.001):
    """One bias-corrected Adam update; returns new ``(params, state)``."""
    t = state.t + 1
    m = tuple(BETA1 * m + (1 - BETA1) * g for m, g in zip(state.m, grads))
    v = tuple(BETA2 * v + (1 - BETA2) * g * g for v, g in zip(state.v, grads))
    c1 = 1 - BETA1**t
    c2 = 1 - BETA2**t
    new = [p - lr * (mi / c1) / (np.sqrt(vi / c2) + EPS) for p, mi, vi in zip(params, m, v)]
    if hasattr(params, "_make"):
        new = params._make(new)
    return new, AdamState(m, v, t)


def mlp_fit(X, Y, hidden_units=300, epochs=100, batch_size=128, learning_rate=0.001,
            dropout_rate=0.0, seed=0):
    """Train from a seeded initialization; returns ``(params, loss_history)``.

    Each epoch reshuffles the rows with the same generator and walks
    mini-batches in order (the last one may be short). A fresh input
    dropout mask is drawn per sample per batch when ``dropout_rate > 0``.
    """
    rng = np.random.default_rng(seed)
    n, d = X.shape
    params = init_params(rng, d, hidden_units, Y.shape[1])
    state = AdamState.zeros_like(params)
    history = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb, yb = X[idx], Y[idx]
            mask = rng.random(xb.shape) >= dropout_rate if dropout_rate > 0 else None
            out, cache = mlp_forward(params, xb, mask, dropout_rate)
            loss = mlp_loss(out, yb)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch offset {start}")
            total += loss * len(idx)
            params, state = adam_step(params, mlp_backward(params, yb, cache), state,
                                      learning_rate)
        history.append(total / n)
    return params, np.asarray(history)


class MLPRegressor(MultiOutputRegressor):
    """Sigmoid hidden layer, linear output, optional dropout on the inputs.

    Parameters
    ----------
    hidden_units : int, default=300
    epochs : int, default=100
    batch_size : int, default=128
    learning_rate : float, default=0.001
    dropout_rate : float, default=0.0
        Input-layer dropout probability during training.
    random_state : int, default=0

    Attributes
    ----------
    params_ : MlpParams
    loss_history_ : ndarray of shape (epochs,)
        Mean training loss per epoch.
    """

    def __init__(self, hidden_units=300, epochs=100, batch_size=128, learning_rate=0.001,
                 dropout_rate=0.0, random_state=0):
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout_rate = dropout_rate
        self.random_state = random_state

    def fit(self, X, Y):
        X, Y = self._validate_fit(X, Y)
        self.params_, self.loss_history_ = mlp_fit(
            X, Y,
            hidden_units=self.hidden_units,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout_rate=self.dropout_rate,
            seed=self.random_state,
        )
        return self

    def predict(self, X):
        X = self._validate_predict(X)
        return self._output(mlp_forward(self.params_, X)[0])
