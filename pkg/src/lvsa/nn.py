"""Feedforward nets with LeakyReLU, hand-written backward pass, and Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

DEFAULT_SLOPE = 0.01


@dataclass
class Mlp:
    weights: list  # (out, in) arrays
    biases: list  # (out,) arrays
    slope: float = DEFAULT_SLOPE

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.slope)


def mlp_init(dims, seed: int, slope: float = DEFAULT_SLOPE, dtype=np.float64) -> Mlp:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    dims = [int(x) for x in dims]
    if len(dims) < 2:
        raise DimensionError("an MLP needs at least an input and an output width")
    if min(dims) < 1:
        raise DimensionError(f"layer widths must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return Mlp(weights, biases, slope)


def leaky_relu(x: np.ndarray, slope: float = DEFAULT_SLOPE) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def forward(m: Mlp, x: np.ndarray, cache: list | None = None) -> np.ndarray:
    """Affine/LeakyReLU stack with a linear last layer; ``x`` is (..., in).

    When ``cache`` is a list, each layer's input is appended to it for
    backward.
    """
    if x.shape[-1] != m.weights[0].shape[1]:
        raise DimensionError(f"input width {x.shape[-1]} != {m.weights[0].shape[1]}")
    h = x
    last = m.num_layers - 1
    for k, (w, b) in enumerate(zip(m.weights, m.biases)):
        if cache is not None:
            cache.append(h)
        z = h @ w.T + b
        h = z if k == last else np.where(z > 0, z, m.slope * z)
    return h


def backward(m: Mlp, x: np.ndarray, upstream: np.ndarray, cache: list | None = None):
    """Return ``(input_grad, [(dW, db), ...])`` for ``forward(m, x)``.

    Parameter gradients are summed over any batch axes.  The LeakyReLU
    derivative at exactly 0 is taken as the slope.
    """
    if cache is None:
        cache = []
        forward(m, x, cache)
    if upstream.shape[-1] != m.dims[-1]:
        raise DimensionError(f"upstream width {upstream.shape[-1]} != {m.dims[-1]}")
    grads = [None] * m.num_layers
    g = upstream
    for k in range(m.num_layers - 1, -1, -1):
        w = m.weights[k]
        h_in = cache[k]
        if k < m.num_layers - 1:
            # the cached input of layer k+1 is leaky(z_k), positive exactly where z_k is
            g = np.where(cache[k + 1] > 0, g, m.slope * g)
        g2 = g.reshape(-1, g.shape[-1])
        h2 = h_in.reshape(-1, h_in.shape[-1])
        grads[k] = (g2.T @ h2, g2.sum(axis=0))
        g = g @ w
    return g, grads


@dataclass
class AdamState:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def _real_view(a: np.ndarray) -> np.ndarray:
    return a.view(a.real.dtype) if np.iscomplexobj(a) else a


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """Bias-corrected Adam update, in place, for every key in ``grads``.

    Complex arrays are updated through their real view, so real and
    imaginary parts get independent moment estimates.
    """
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for key, g in grads.items():
        p = params[key]
        if p.shape != g.shape:
            raise DimensionError(f"{key}: param shape {p.shape} != grad shape {g.shape}")
        pv, gv = _real_view(p), _real_view(np.ascontiguousarray(g))
        if key not in state.m:
            state.m[key] = np.zeros_like(pv)
            state.v[key] = np.zeros_like(pv)
        m, v = state.m[key], state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * gv
        v *= state.beta2
        v += (1.0 - state.beta2) * gv * gv
        pv -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
