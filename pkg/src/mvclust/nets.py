"""Dense feed-forward networks with hand-written backprop, plus Adam.

Everything runs in float64. Networks are small (at most 4 weight layers),
so explicit gradients are preferred over a general autodiff graph: the
gradient of every loss in the package can be checked against finite
differences.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ShapeError

# Probabilities are clamped into this range before any logarithm.
PROB_EPS = 1e-7

_ACTIVATIONS = ("identity", "relu", "sigmoid", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input first) and one activation tag per weight layer."""

    widths: tuple
    activations: tuple

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ShapeError("an MLP needs at least an input and an output width")
        if any(w < 1 for w in self.widths):
            raise ShapeError(f"all widths must be >= 1, got {self.widths}")
        if len(self.activations) != len(self.widths) - 1:
            raise ShapeError(
                f"{len(self.widths) - 1} weight layers but "
                f"{len(self.activations)} activations"
            )
        for a in self.activations:
            if a not in _ACTIVATIONS:
                raise ShapeError(f"unknown activation {a!r}")

    @property
    def n_layers(self):
        return len(self.widths) - 1


@dataclass
class MlpParams:
    """Weights (fan_in x fan_out) and biases, one pair per layer."""

    weights: list
    biases: list

    def blocks(self):
        """All parameter arrays in a fixed order (weights then biases per layer)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self):
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases])


def init_mlp(spec, rng):
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def _act(name, z):
    if name == "identity":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return np.tanh(z)


def _act_grad(name, z, a):
    if name == "identity":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "sigmoid":
        return a * (1.0 - a)
    return 1.0 - a * a


def mlp_forward(params, spec, x):
    """Forward pass. Returns (output, cache); the cache feeds mlp_backward."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"input must be 2-D (batch, features), got ndim={x.ndim}")
    if x.shape[1] != spec.widths[0]:
        raise ShapeError(
            f"input has {x.shape[1]} columns, network expects {spec.widths[0]}"
        )
    pre, post = [], []
    a = x
    for w, b, act in zip(params.weights, params.biases, spec.activations):
        z = a @ w + b
        a = _act(act, z)
        pre.append(z)
        post.append(a)
    cache = {"input": x, "pre": pre, "post": post, "widths": spec.widths}
    return a, cache


def mlp_backward(params, spec, cache, grad_out):
    """Backprop. Returns (parameter gradients as MlpParams, gradient w.r.t. input)."""
    if cache.get("widths") != spec.widths or len(cache["pre"]) != spec.n_layers:
        raise ShapeError("cache does not match this network")
    grad_out = np.asarray(grad_out, dtype=float)
    if grad_out.shape != cache["post"][-1].shape:
        raise ShapeError(
            f"output gradient shape {grad_out.shape} does not match "
            f"forward output {cache['post'][-1].shape}"
        )
    g_w = [None] * spec.n_layers
    g_b = [None] * spec.n_layers
    delta = grad_out
    for layer in range(spec.n_layers - 1, -1, -1):
        z = cache["pre"][layer]
        a = cache["post"][layer]
        delta = delta * _act_grad(spec.activations[layer], z, a)
        a_prev = cache["input"] if layer == 0 else cache["post"][layer - 1]
        g_w[layer] = a_prev.T @ delta
        g_b[layer] = delta.sum(axis=0)
        delta = delta @ params.weights[layer].T
    return MlpParams(g_w, g_b), delta


def clamp_prob(p):
    """Keep probabilities away from 0/1 before taking logs."""
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


@dataclass
class AdamState:
    """Adam moments for a fixed list of parameter blocks."""

    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.99
    epsilon: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(state, params, grads):
    """One bias-corrected Adam update, applied in place to ``params``.

    ``params`` and ``grads`` are parallel lists of arrays.
    """
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameter blocks vs {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for idx, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in parameter block {idx}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)


@dataclass
class Net:
    """An MLP together with its spec; the unit everything else composes."""

    spec: MlpSpec
    params: MlpParams

    def forward(self, x):
        return mlp_forward(self.params, self.spec, x)

    def backward(self, cache, grad_out):
        return mlp_backward(self.params, self.spec, cache, grad_out)

    def blocks(self):
        return self.params.blocks()


def make_net(widths, activations, rng):
    spec = MlpSpec(tuple(widths), tuple(activations))
    return Net(spec, init_mlp(spec, rng))
