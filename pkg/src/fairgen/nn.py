"""Minimal dense-network engine: MLPs, backprop, Adam, BCE.

Everything is plain numpy. Parameters are treated as immutable: forward,
backward and optimizer steps return fresh arrays instead of mutating, so a
finished model can be shared read-only across threads while a training loop
owns its own copy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

ACTIVATIONS = ("relu", "leaky_relu", "sigmoid", "identity", "tanh")

# Negative-side slope for leaky_relu. Plain relu units fed non-negative
# tabular encodings die wholesale under adversarial training (a bias drift
# can zero a unit over the entire input domain, freezing its gradient), so
# discriminator hiddens use the leaky variant.
LEAKY_SLOPE = 0.2

# Probabilities fed to log() are clamped this far away from {0, 1}.
PROB_CLAMP = 1e-7


class LayerShapeError(ValueError):
    """Raised when an input or gradient does not chain with a layer's shape."""


@dataclass(frozen=True)
class Layer:
    """One dense layer: weight is [in x out] row-major, bias is [out]."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise LayerShapeError("weight must be 2-D and bias 1-D")
        if self.weight.shape[1] != self.bias.shape[0]:
            raise LayerShapeError(
                f"bias width {self.bias.shape[0]} != weight out-dim {self.weight.shape[1]}"
            )

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass(frozen=True)
class Mlp:
    """A feedforward stack of dense layers with chained dimensions."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        for i in range(1, len(self.layers)):
            if self.layers[i].in_dim != self.layers[i - 1].out_dim:
                raise LayerShapeError(
                    f"layer {i} expects {self.layers[i].in_dim} inputs but layer "
                    f"{i - 1} emits {self.layers[i - 1].out_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; identical seeds give identical draw sequences."""
    return np.random.Generator(np.random.PCG64(seed))


def init_mlp(dims, activations, rng, dtype=np.float64) -> Mlp:
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.

    ``dims`` is [in, h1, ..., out]; ``activations`` has one tag per layer.
    """
    if len(activations) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for i, act in enumerate(activations):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)
        b = np.zeros(fan_out, dtype=dtype)
        layers.append(Layer(w, b, act))
    return Mlp(tuple(layers))


def _apply_activation(act: str, z: np.ndarray) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if act == "sigmoid":
        # sign-split form avoids overflow in exp for large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if act == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(act: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if act == "relu":
        return (z > 0).astype(z.dtype)
    if act == "leaky_relu":
        return np.where(z > 0, z.dtype.type(1.0), z.dtype.type(LEAKY_SLOPE))
    if act == "sigmoid":
        return a * (1.0 - a)
    if act == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def mlp_forward(mlp: Mlp, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Run the network on a [n x in_dim] batch.

    Returns (output, cache); the cache keeps the input plus every layer's
    pre/post activation and is what mlp_backward consumes.
    """
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != mlp.in_dim:
        raise LayerShapeError(
            f"layer 0 expects input width {mlp.in_dim}, got {x.shape}"
        )
    cache = [("input", x)]
    a = x
    for i, layer in enumerate(mlp.layers):
        z = a @ layer.weight + layer.bias
        a = _apply_activation(layer.activation, z)
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"non-finite output at layer {i}")
        cache.append((z, a))
    return a, cache


def mlp_backward(mlp: Mlp, cache: list, upstream: np.ndarray):
    """Backprop ``upstream`` = dLoss/dOutput through the cached forward pass.

    Returns (grads, input_grad) where grads is a list of (dW, db) shaped like
    the layers and input_grad is dLoss/dInput (used to chain networks).
    """
    if len(cache) != len(mlp.layers) + 1:
        raise LayerShapeError("cache does not match network depth")
    _, out = cache[-1]
    upstream = np.asarray(upstream)
    if upstream.shape != out.shape:
        raise LayerShapeError(
            f"upstream gradient shape {upstream.shape} != output shape {out.shape}"
        )
    grads = [None] * len(mlp.layers)
    delta = upstream
    for i in range(len(mlp.layers) - 1, -1, -1):
        layer = mlp.layers[i]
        z, a = cache[i + 1]
        prev_a = cache[i][1]
        delta = delta * _activation_grad(layer.activation, z, a)
        grads[i] = (prev_a.T @ delta, delta.sum(axis=0))
        delta = delta @ layer.weight.T
    return grads, delta


def zero_grads_like(mlp: Mlp) -> list:
    return [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in mlp.layers]


@dataclass(frozen=True)
class AdamState:
    """Adam moments shaped like an Mlp; step counts completed updates."""

    step: int
    m: tuple
    v: tuple
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(mlp: Mlp, lr: float = 0.001, beta1: float = 0.9) -> AdamState:
    zeros = tuple(
        (np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in mlp.layers
    )
    return AdamState(step=0, m=zeros, v=zeros, lr=lr, beta1=beta1)


def adam_step(mlp: Mlp, grads, state: AdamState) -> tuple[Mlp, AdamState]:
    """Standard bias-corrected Adam update; returns new params and state.

    An all-zero gradient leaves the parameters untouched (the moments still
    decay), so a skipped objective can never drag the network around.
    """
    if len(grads) != len(mlp.layers):
        raise LayerShapeError("gradient list does not match network depth")
    for (gw, gb), layer in zip(grads, mlp.layers):
        if gw.shape != layer.weight.shape or gb.shape != layer.bias.shape:
            raise LayerShapeError("gradient shapes do not match parameters")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    all_zero = all(not gw.any() and not gb.any() for gw, gb in grads)
    new_m, new_v, new_layers = [], [], []
    for (gw, gb), (mw, mb), (vw, vb), layer in zip(grads, state.m, state.v, mlp.layers):
        mw2 = b1 * mw + (1 - b1) * gw
        mb2 = b1 * mb + (1 - b1) * gb
        vw2 = b2 * vw + (1 - b2) * gw * gw
        vb2 = b2 * vb + (1 - b2) * gb * gb
        new_m.append((mw2, mb2))
        new_v.append((vw2, vb2))
        if all_zero:
            new_layers.append(layer)
            continue
        c1 = 1 - b1**t
        c2 = 1 - b2**t
        w = layer.weight - state.lr * (mw2 / c1) / (np.sqrt(vw2 / c2) + state.eps)
        b = layer.bias - state.lr * (mb2 / c1) / (np.sqrt(vb2 / c2) + state.eps)
        new_layers.append(Layer(w, b, layer.activation))
    return Mlp(tuple(new_layers)), replace(state, step=t, m=tuple(new_m), v=tuple(new_v))


def clamp_probs(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def bce_terms(predictions: np.ndarray, targets: np.ndarray):
    """Mean binary cross-entropy and its gradient w.r.t. the predictions.

    Predictions are clamped to [1e-7, 1-1e-7] before the logs; the gradient is
    taken at the clamped values, which keeps it consistent with the returned
    loss everywhere the clamp is inactive.
    """
    p = clamp_probs(np.asarray(predictions, dtype=float))
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise LayerShapeError(f"prediction shape {p.shape} != target shape {t.shape}")
    n = p.size
    loss = -np.sum(t * np.log(p) + (1 - t) * np.log(1 - p)) / n
    grad = (-t / p + (1 - t) / (1 - p)) / n
    return loss, grad.reshape(np.shape(predictions))


# --- checkpoint format -------------------------------------------------------
# A single JSON object mapping layer index -> {rows, cols, weights, bias,
# activation}. Floats go through Python's repr (shortest round-trip decimal,
# >= 17 significant digits), so save/load is lossless.


def mlp_to_dict(mlp: Mlp) -> dict:
    doc = {}
    for i, layer in enumerate(mlp.layers):
        doc[str(i)] = {
            "rows": layer.weight.shape[0],
            "cols": layer.weight.shape[1],
            "weights": [float(x) for x in layer.weight.ravel()],
            "bias": [float(x) for x in layer.bias],
            "activation": layer.activation,
        }
    return doc


def mlp_from_dict(doc: dict) -> Mlp:
    layers = []
    for i in range(len(doc)):
        spec = doc[str(i)]
        w = np.array(spec["weights"], dtype=np.float64).reshape(
            spec["rows"], spec["cols"]
        )
        b = np.array(spec["bias"], dtype=np.float64)
        layers.append(Layer(w, b, spec["activation"]))
    return Mlp(tuple(layers))


def save_mlp(mlp: Mlp, path) -> None:
    with open(path, "w") as fh:
        json.dump(mlp_to_dict(mlp), fh)


def load_mlp(path) -> Mlp:
    with open(path) as fh:
        return mlp_from_dict(json.load(fh))
