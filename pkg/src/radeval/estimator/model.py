"""Pooling, combined features, and the feed-forward regression head.

The head is a small tanh MLP trained by backprop on mean squared error; the
analytic gradients here are checked against finite differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POOLING_MODES = ("mean", "first_token")


def pool(token_vectors: np.ndarray, mode: str = "mean") -> np.ndarray:
    """Collapse a token-vector sequence into one sentence embedding."""
    token_vectors = np.asarray(token_vectors, dtype=float)
    if token_vectors.ndim != 2 or token_vectors.shape[0] == 0:
        raise ValueError("cannot pool an empty token sequence")
    if mode == "mean":
        return token_vectors.mean(axis=0)
    if mode == "first_token":
        return token_vectors[0].copy()
    raise ValueError(f"unknown pooling mode {mode!r}")


def combine(h: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Combined feature vector [h; s; h*s; |h-s|] of dimension 4d."""
    h = np.asarray(h, dtype=float)
    s = np.asarray(s, dtype=float)
    if h.shape != s.shape or h.ndim != 1:
        raise ValueError(f"embedding shapes differ: {h.shape} vs {s.shape}")
    return np.concatenate([h, s, h * s, np.abs(h - s)])


@dataclass
class RegressorParams:
    """Weights and biases of the feed-forward head, input to output order."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def copy(self) -> "RegressorParams":
        return RegressorParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def unflatten_params(flat: np.ndarray, layer_sizes: tuple[int, ...]) -> RegressorParams:
    weights, biases = [], []
    offset = 0
    for n_in, n_out in zip(layer_sizes, layer_sizes[1:]):
        weights.append(flat[offset:offset + n_in * n_out].reshape(n_in, n_out).copy())
        offset += n_in * n_out
        biases.append(flat[offset:offset + n_out].copy())
        offset += n_out
    if offset != flat.size:
        raise ValueError(f"parameter vector length {flat.size} does not match sizes {layer_sizes}")
    return RegressorParams(weights=weights, biases=biases)


def default_hidden_sizes(input_dim: int) -> tuple[int, int]:
    # two hidden layers sized relative to the encoder dimension d = input/4
    return (input_dim // 2, input_dim // 4)


def init_regressor(input_dim: int, hidden: tuple[int, ...] | None, seed: int) -> RegressorParams:
    if hidden is None:
        hidden = default_hidden_sizes(input_dim)
    sizes = (input_dim,) + tuple(hidden) + (1,)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(sizes, sizes[1:]):
        scale = np.sqrt(2.0 / (n_in + n_out))
        weights.append(rng.normal(0.0, scale, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return RegressorParams(weights=weights, biases=biases)


def forward(params: RegressorParams, features: np.ndarray) -> np.ndarray:
    """Predicted scores for a feature matrix (n, 4d) or single vector."""
    features = np.asarray(features, dtype=float)
    single = features.ndim == 1
    act = features[None, :] if single else features
    if act.shape[1] != params.weights[0].shape[0]:
        raise ValueError(
            f"feature dimension {act.shape[1]} does not match head input {params.weights[0].shape[0]}"
        )
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        act = act @ w + b
        if i < last:
            act = np.tanh(act)
    out = act[:, 0]
    return float(out[0]) if single else out


def regress(features: np.ndarray, params: RegressorParams) -> float:
    return forward(params, np.asarray(features, dtype=float))


def mse_loss_and_grads(
    params: RegressorParams,
    features: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, RegressorParams]:
    """Mean squared error and its gradient with respect to every parameter."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    n = x.shape[0]

    activations = [x]
    pre = []
    act = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = act @ w + b
        pre.append(z)
        act = np.tanh(z) if i < last else z
        activations.append(act)

    pred = activations[-1][:, 0]
    err = pred - y
    loss = float((err ** 2).mean())

    grad_w = [np.zeros_like(w) for w in params.weights]
    grad_b = [np.zeros_like(b) for b in params.biases]
    delta = (2.0 / n) * err[:, None]
    for i in range(last, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (1.0 - np.tanh(pre[i - 1]) ** 2)
    return loss, RegressorParams(weights=grad_w, biases=grad_b)


@dataclass
class AdamState:
    m: RegressorParams
    v: RegressorParams
    t: int = 0


def init_adam(params: RegressorParams) -> AdamState:
    zeros = RegressorParams(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )
    return AdamState(m=zeros, v=zeros.copy())


def adam_step(
    params: RegressorParams,
    grads: RegressorParams,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    state.t += 1
    correction1 = 1.0 - beta1 ** state.t
    correction2 = 1.0 - beta2 ** state.t
    for group in ("weights", "biases"):
        ps = getattr(params, group)
        gs = getattr(grads, group)
        ms = getattr(state.m, group)
        vs = getattr(state.v, group)
        for p, g, m, v in zip(ps, gs, ms, vs):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            p -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)


def sgd_step(params: RegressorParams, grads: RegressorParams, lr: float) -> None:
    for group in ("weights", "biases"):
        for p, g in zip(getattr(params, group), getattr(grads, group)):
            p -= lr * g
