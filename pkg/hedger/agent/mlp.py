"""
Multilayer Perceptron
Numpy MLP with ReLU hidden layers and hand-written reverse mode

Inputs are batches shaped (batch, in); a 1-D input is treated as one row.
Parameter gradients are summed over the batch, so callers scale the upstream
gradient (e.g. by 1/batch) to get mean-loss gradients.
"""
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.special import expit

from hedger.errors import ParameterError

OutputActivation = Literal["sigmoid", "linear"]


@dataclass
class MlpCache:
    activations: list
    pre_activations: list
    squeeze: bool


@dataclass
class MlpGrads:
    weights: list
    biases: list

    def flat(self) -> np.ndarray:
        return np.concatenate([g.ravel() for pair in zip(self.weights, self.biases) for g in pair])


@dataclass
class Mlp:
    sizes: tuple
    weights: list
    biases: list
    output: OutputActivation = "linear"

    def __post_init__(self):
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ParameterError("one weight matrix and bias per layer is required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ParameterError(f"layer {i} has shape {w.shape}/{b.shape}, sizes say {self.sizes}")
        if self.output not in ("sigmoid", "linear"):
            raise ParameterError(f"unknown output activation {self.output!r}")

    @classmethod
    def initialise(
        cls, sizes: tuple, output: OutputActivation, rng: np.random.Generator
    ) -> "Mlp":
        """Uniform +/- 1/sqrt(fan_in) weights and biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, fan_out))
        return cls(tuple(int(s) for s in sizes), weights, biases, output)

    @classmethod
    def zeros(cls, sizes: tuple, output: OutputActivation = "linear") -> "Mlp":
        return cls(
            tuple(sizes),
            [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
            [np.zeros(b) for b in sizes[1:]],
            output,
        )

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.output)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> list:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def set_flat(self, theta: np.ndarray) -> None:
        offset = 0
        for p in self.parameters():
            p[...] = theta[offset : offset + p.size].reshape(p.shape)
            offset += p.size

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, MlpCache]:
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        a = x[None, :] if squeeze else x
        if a.ndim != 2 or a.shape[1] != self.sizes[0]:
            raise ParameterError(f"expected input width {self.sizes[0]}, got shape {x.shape}")

        activations, pre = [a], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            if i < self.n_layers - 1:
                a = np.maximum(z, 0.0)
            else:
                a = expit(z) if self.output == "sigmoid" else z
            activations.append(a)
        out = a[0] if squeeze else a
        return out, MlpCache(activations, pre, squeeze)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: MlpCache, upstream: np.ndarray) -> tuple[MlpGrads, np.ndarray]:
        """Gradients of sum(upstream * output) w.r.t. every parameter and the input."""
        delta = np.asarray(upstream, dtype=float)
        if cache.squeeze:
            delta = delta[None, :]
        out = cache.activations[-1]
        if self.output == "sigmoid":
            delta = delta * out * (1.0 - out)

        grad_w: list = [None] * self.n_layers
        grad_b: list = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            grad_w[i] = cache.activations[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (cache.pre_activations[i - 1] > 0)
        dx = delta[0] if cache.squeeze else delta
        return MlpGrads(grad_w, grad_b), dx

    def sgd_step(self, grads: MlpGrads, lr: float, ascent: bool = False) -> None:
        """theta <- theta - lr * grad (or + for ascent)."""
        sign = 1.0 if ascent else -1.0
        for w, b, gw, gb in zip(self.weights, self.biases, grads.weights, grads.biases):
            w += sign * lr * gw
            b += sign * lr * gb


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """target <- (1 - tau) target + tau online, in place."""
    if target.sizes != online.sizes:
        raise ParameterError(f"shape mismatch: {target.sizes} vs {online.sizes}")
    if not 0.0 <= tau <= 1.0:
        raise ParameterError(f"tau must lie in [0, 1], got {tau}")
    for t, o in zip(target.parameters(), online.parameters()):
        t *= 1.0 - tau
        t += tau * o
    return target


def is_finite(net: Mlp, inputs: Optional[np.ndarray] = None) -> bool:
    ok = all(np.all(np.isfinite(p)) for p in net.parameters())
    if ok and inputs is not None:
        ok = bool(np.all(np.isfinite(net(inputs))))
    return ok
