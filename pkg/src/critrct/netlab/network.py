"""Fully-connected networks with inverted dropout on every layer input.

Layer ``l`` computes ``h = W (x ⊙ eps / (1 - theta)) + b`` followed by the
activation, where ``eps`` is a fresh Bernoulli(1 - theta) mask per unit and per
example. The readout layer is linear and gets the same input dropout. Inputs
are stored row-wise: a batch has shape ``(n, input_dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..meanfield import HyperParams

ACTIVATIONS = ("relu", "linear", "sigmoid")
INIT_SCHEMES = ("scaled", "xavier")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture and initialisation of a network.

    ``init_scheme="scaled"`` draws weights with variance ``sigma_w_sq / fan_in``;
    ``"xavier"`` uses ``2 / (fan_in + fan_out)`` and ignores ``sigma_w_sq``.
    """

    input_dim: int
    hidden_width: int
    depth: int
    output_dim: int
    theta: float = 0.0
    init: HyperParams = HyperParams(2.0)
    activation: str = "relu"
    init_scheme: str = "scaled"

    def __post_init__(self):
        if min(self.input_dim, self.hidden_width, self.output_dim) < 1:
            raise ValueError("layer widths must be >= 1")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth!r}")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.theta!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.init_scheme not in INIT_SCHEMES:
            raise ValueError(f"init_scheme must be one of {INIT_SCHEMES}, got {self.init_scheme!r}")

    @property
    def layer_dims(self):
        return [self.input_dim] + [self.hidden_width] * self.depth + [self.output_dim]

    @property
    def n_layers(self):
        return self.depth + 1


@dataclass
class NetworkState:
    weights: list
    biases: list

    @property
    def params(self):
        return self.weights + self.biases

    def copy(self):
        return NetworkState([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class ForwardCache:
    """Per-layer quantities of one forward pass.

    ``inputs[l]`` is the dropped-out, rescaled input of layer ``l`` (0-based),
    ``pre[l]`` its pre-activation and ``masks[l]`` the Bernoulli mask (``None``
    in eval mode). ``pre[-1]`` holds the logits.
    """

    inputs: list
    pre: list
    masks: list
    mode: str

    @property
    def logits(self):
        return self.pre[-1]


def init_network(spec, rng, dtype=np.float64):
    weights, biases = [], []
    dims = spec.layer_dims
    sigma_b = np.sqrt(spec.init.sigma_b_sq)
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        if spec.init_scheme == "xavier":
            std = np.sqrt(2.0 / (fan_in + fan_out))
        else:
            std = np.sqrt(spec.init.sigma_w_sq / fan_in)
        w = rng.standard_normal((fan_out, fan_in)) * std
        if sigma_b > 0:
            b = rng.standard_normal(fan_out) * sigma_b
        else:
            b = np.zeros(fan_out)
        weights.append(w.astype(dtype, copy=False))
        biases.append(b.astype(dtype, copy=False))
    return NetworkState(weights, biases)


def activate(name, h):
    if name == "relu":
        return np.maximum(h, 0)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * h))
    return h


def activate_grad(name, h, x):
    """Derivative of the activation at ``h`` given its output ``x``."""
    if name == "relu":
        return (h > 0).astype(h.dtype)
    if name == "sigmoid":
        return x * (1 - x)
    return np.ones_like(h)


def sample_masks(spec, batch_size, rng, dtype=np.float64):
    keep = 1.0 - spec.theta
    dims = spec.layer_dims[:-1]
    return [(rng.random((batch_size, d)) < keep).astype(dtype) for d in dims]


def forward(state, spec, batch, mode="train", rng=None, masks=None):
    """Run the network on ``batch``.

    In train mode dropout masks are drawn from ``rng`` unless ``masks`` is given
    (one ``(n, fan_in)`` 0/1 array per layer). Eval mode uses no mask.
    """
    x = np.asarray(batch)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ValueError(f"expected a batch of shape (n, {spec.input_dim}), got {x.shape}")
    x = x.astype(state.weights[0].dtype, copy=False)
    train = mode == "train"
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if train and masks is None and spec.theta > 0:
        if rng is None:
            raise ValueError("train mode with dropout needs an rng or explicit masks")
        masks = sample_masks(spec, x.shape[0], rng, x.dtype)
    scale = 1.0 / (1.0 - spec.theta)

    inputs, pre, used = [], [], []
    last = spec.n_layers - 1
    for l, (w, b) in enumerate(zip(state.weights, state.biases)):
        if train and masks is not None:
            mask = masks[l]
            u = x * mask * x.dtype.type(scale)
        else:
            mask = None
            u = x
        h = u @ w.T + b
        inputs.append(u)
        pre.append(h)
        used.append(mask)
        x = h if l == last else activate(spec.activation, h)
    return ForwardCache(inputs, pre, used, mode)


def softmax_cross_entropy(logits, targets):
    """Mean cross-entropy and the softmax probabilities.

    ``targets`` is either integer class labels or a matrix of target probabilities.
    """
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsum
    y = _target_matrix(targets, logits)
    loss = -(y * logp).sum(axis=1).mean()
    return float(loss), np.exp(logp)


def _target_matrix(targets, logits):
    targets = np.asarray(targets)
    if targets.ndim == 1:
        y = np.zeros_like(logits)
        y[np.arange(len(targets)), targets.astype(int)] = 1
        return y
    return targets.astype(logits.dtype, copy=False)


def backward(state, spec, cache, targets, scale=1.0, probs=None):
    """Gradients of ``scale`` times the mean softmax cross-entropy.

    Returns ``(weight_grads, bias_grads)`` aligned with ``state``. The masks stored
    in ``cache`` are reused, so dropout is treated as fixed noise.
    """
    logits = cache.logits
    if probs is None:
        _, probs = softmax_cross_entropy(logits, targets)
    n = logits.shape[0]
    delta = (probs - _target_matrix(targets, logits)) * (scale / n)
    keep_scale = 1.0 / (1.0 - spec.theta)

    gw = [None] * spec.n_layers
    gb = [None] * spec.n_layers
    for l in range(spec.n_layers - 1, -1, -1):
        gw[l] = delta.T @ cache.inputs[l]
        gb[l] = delta.sum(axis=0)
        if l == 0:
            break
        grad_u = delta @ state.weights[l]
        mask = cache.masks[l]
        if mask is not None:
            grad_u = grad_u * mask * grad_u.dtype.type(keep_scale)
        h = cache.pre[l - 1]
        x = activate(spec.activation, h) if spec.activation == "sigmoid" else None
        delta = grad_u * activate_grad(spec.activation, h, x)
    return gw, gb


def accuracy(state, spec, x, y, batch_size=4096):
    """Eval-mode accuracy; ``nan`` if any logit is non-finite."""
    correct = 0
    for start in range(0, len(x), batch_size):
        logits = forward(state, spec, x[start:start + batch_size], mode="eval").logits
        if not np.all(np.isfinite(logits)):
            return float("nan")
        correct += int((logits.argmax(axis=1) == y[start:start + batch_size]).sum())
    return correct / len(x)
