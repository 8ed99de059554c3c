"""Small dense networks in numpy: init, forward, backprop, Adam and a text checkpoint.

Inputs may be a single vector ``(fan_in,)`` or a batch ``(n, fan_in)``; for a
batch the parameter gradients are summed over rows, so callers fold any
``1/n`` into the output gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    flat = z.reshape(-1)
    out = np.empty_like(flat)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ez = np.exp(flat[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out.reshape(z.shape)


def activate(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "sigmoid":
        return _sigmoid(z)
    if tag == "tanh":
        return np.tanh(z)
    if tag == "linear":
        return z
    raise ValueError(f"unknown activation {tag!r}")


def activation_grad(tag: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """d(activation)/dz given pre-activation ``z`` and output ``a``; relu'(0) = 0."""
    if tag == "relu":
        return (z > 0).astype(z.dtype)
    if tag == "sigmoid":
        return a * (1.0 - a)
    if tag == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


@dataclass
class Layer:
    weight: np.ndarray    # (fan_out, fan_in)
    bias: np.ndarray      # (fan_out,)
    activation: str


@dataclass
class Mlp:
    layers: list[Layer]
    _cache: Optional[list] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.bias.shape != (layer.weight.shape[0],):
                raise ValueError(f"layer {i}: bias shape {layer.bias.shape} does not match "
                                 f"weight shape {layer.weight.shape}")
            if i and layer.weight.shape[1] != self.layers[i - 1].weight.shape[0]:
                raise ValueError(f"layer {i}: fan_in {layer.weight.shape[1]} does not chain "
                                 f"with previous fan_out {self.layers[i - 1].weight.shape[0]}")

    @property
    def sizes(self) -> list[int]:
        return [self.layers[0].weight.shape[1]] + [l.weight.shape[0] for l in self.layers]

    @property
    def activations(self) -> list[str]:
        return [l.activation for l in self.layers]

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    def copy(self) -> "Mlp":
        return Mlp([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"input has {x.shape[-1]} features, network expects {self.sizes[0]}")
        cache = []
        a = x
        for layer in self.layers:
            z = a @ layer.weight.T + layer.bias
            out = activate(layer.activation, z)
            cache.append((a, z, out))
            a = out
        self._cache = cache
        return a

    __call__ = forward

    def backward(self, grad_out) -> tuple[list[np.ndarray], np.ndarray]:
        """Reverse-mode pass for the last ``forward``.

        Returns the gradients in ``params()`` order and the gradient w.r.t. the input.
        """
        if self._cache is None:
            raise RuntimeError("backward() called before forward()")
        g = np.asarray(grad_out, dtype=float)
        grads: list[np.ndarray] = []
        for layer, (a_in, z, a_out) in zip(reversed(self.layers), reversed(self._cache)):
            dz = g * activation_grad(layer.activation, z, a_out)
            if dz.ndim == 1:
                dw = np.outer(dz, a_in)
                db = dz.copy()
            else:
                dw = dz.T @ a_in
                db = dz.sum(axis=0)
            grads += [db, dw]
            g = dz @ layer.weight
        grads.reverse()
        return grads, g


def truncated_normal(rng: np.random.Generator, std: float, shape, bound: float = 2.0) -> np.ndarray:
    """Normal(0, std) samples redrawn until they fall within ``bound`` std."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > bound * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > bound * std
    return out


def init_mlp(layer_sizes: Sequence[int], activations: Sequence[str],
             rng: np.random.Generator, bias: float = 0.001) -> Mlp:
    """He-scaled truncated-normal weights (std sqrt(2/fan_in)) and constant biases."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if len(activations) != len(layer_sizes) - 1:
        raise ValueError(f"{len(layer_sizes) - 1} layers need as many activations, "
                         f"got {len(activations)}")
    layers = []
    for fan_in, fan_out, act in zip(layer_sizes[:-1], layer_sizes[1:], activations):
        w = truncated_normal(rng, np.sqrt(2.0 / fan_in), (fan_out, fan_in))
        layers.append(Layer(w, np.full(fan_out, bias), act))
    return Mlp(layers)


@dataclass
class OptimState:
    """Adam moments for one network."""

    lr: float
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_mlp(cls, mlp: Mlp, lr: float = 1e-3) -> "OptimState":
        return cls(lr, [np.zeros_like(p) for p in mlp.params()],
                   [np.zeros_like(p) for p in mlp.params()])


def optimizer_step(mlp: Mlp, grads: Sequence[np.ndarray], state: OptimState) -> Mlp:
    """Bias-corrected Adam descent step, applied in place."""
    params = mlp.params()
    if len(grads) != len(params):
        raise ValueError(f"expected {len(params)} gradient arrays, got {len(grads)}")
    for i, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.shape:
            raise ValueError(f"gradient {i} has shape {g.shape}, parameter has {p.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in parameter array {i}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return mlp


def finite_difference_grads(mlp: Mlp, x, loss, eps: float = 1e-5) -> list[np.ndarray]:
    """Central differences of scalar ``loss(mlp.forward(x))`` w.r.t. every parameter."""
    out = []
    for p in mlp.params():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            hi = loss(mlp.forward(x))
            p[idx] = old - eps
            lo = loss(mlp.forward(x))
            p[idx] = old
            g[idx] = (hi - lo) / (2.0 * eps)
        out.append(g)
    return out


def relative_error(a, b, floor: float = 1e-7) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def gradient_check(mlp: Mlp, x, rng: np.random.Generator, eps: float = 1e-5) -> float:
    """Max relative error between backprop and central differences on a random linear loss."""
    y = mlp.forward(x)
    r = rng.normal(size=y.shape)

    def loss(out):
        return float(np.sum(out * r))

    mlp.forward(x)
    analytic, _ = mlp.backward(r)
    numeric = finite_difference_grads(mlp, x, loss, eps)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))


def save_mlp(mlp: Mlp, path) -> None:
    """Text checkpoint: a ``layers:`` header, then activation/weights/biases lines per layer."""
    fmt = lambda arr: " ".join(f"{v:.17g}" for v in np.ravel(arr))  # noqa: E731
    lines = ["layers: " + " ".join(str(s) for s in mlp.sizes)]
    for layer in mlp.layers:
        lines += [layer.activation, fmt(layer.weight), fmt(layer.bias)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mlp(path) -> Mlp:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("layers:"):
        raise ValueError(f"{path}: missing 'layers:' header")
    sizes = [int(s) for s in lines[0].split(":", 1)[1].split()]
    n_layers = len(sizes) - 1
    if n_layers < 1 or len(lines) < 1 + 3 * n_layers:
        raise ValueError(f"{path}: expected {n_layers} layers, file is truncated")
    layers = []
    for i in range(n_layers):
        act, w_line, b_line = lines[1 + 3 * i: 4 + 3 * i]
        w = np.array(w_line.split(), dtype=float)
        b = np.array(b_line.split(), dtype=float)
        if w.size != sizes[i + 1] * sizes[i] or b.size != sizes[i + 1]:
            raise ValueError(f"{path}: layer {i} parameter count does not match header")
        layers.append(Layer(w.reshape(sizes[i + 1], sizes[i]), b, act.strip()))
    return Mlp(layers)
