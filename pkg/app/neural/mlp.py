"""From-scratch feed-forward networks: forward, backprop, SGD, soft target tracking.

Inputs are row-major batches (B, in); a 1-D input is treated as a batch of
one and the result is returned 1-D again. Hidden layers apply the configured
nonlinearity, the output layer is linear.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from app.config import CHECKPOINT_VERSION
from app.errors import ConfigError, NumericalFault, ShapeError

logger = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh")


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return (z > 0).astype(z.dtype)


@dataclass
class Gradients:
    """Per-layer parameter gradients, shaped like the network's parameters."""
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __add__(self, other: Gradients) -> Gradients:
        return Gradients(
            [a + b for a, b in zip(self.weights, other.weights)],
            [a + b for a, b in zip(self.biases, other.biases)],
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([g.ravel() for pair in zip(self.weights, self.biases) for g in pair])


class MlpNetwork:
    """Dense network with layer_sizes = (input, hidden..., output).

    weights[i] has shape (layer_sizes[i], layer_sizes[i+1]) so a batch X maps
    to X @ W + b.
    """

    def __init__(
        self,
        layer_sizes: Sequence[int],
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        activation: str = "relu",
    ):
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ConfigError(f"invalid layer sizes {self.layer_sizes}", field="layer_sizes")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"must be one of {ACTIVATIONS}", field="activation")
        self.activation = activation
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ShapeError(f"layer {i}: got W{w.shape} b{b.shape}, expected W{expected}")
        if len(self.weights) != len(self.layer_sizes) - 1:
            raise ShapeError("one weight matrix per layer transition is required")
        self.check_finite()

    @classmethod
    def initialize(
        cls, layer_sizes: Sequence[int], rng: np.random.Generator, activation: str = "relu",
    ) -> MlpNetwork:
        """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases."""
        sizes = [int(n) for n in layer_sizes]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(sizes, weights, biases, activation)

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int], activation: str = "relu") -> MlpNetwork:
        sizes = [int(n) for n in layer_sizes]
        weights = [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(sizes, weights, biases, activation)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    # ── Forward / backward ─────────────────────────────────────────────

    def _as_batch(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.input_size:
            raise ShapeError(f"input shape {x.shape} does not fit input size {self.input_size}")
        return batch, single

    def _forward_cache(self, batch: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        activations = [batch]
        pre = []
        a = batch
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = z if i == last else _act(z, self.activation)
            activations.append(a)
        return activations, pre

    def forward(self, x: np.ndarray) -> np.ndarray:
        batch, single = self._as_batch(x)
        out = self._forward_cache(batch)[0][-1]
        return out[0] if single else out

    def backward(self, x: np.ndarray, output_grad: np.ndarray) -> tuple[Gradients, np.ndarray]:
        """Backpropagate dL/d(output); returns parameter gradients (summed over the batch) and dL/dx."""
        batch, single = self._as_batch(x)
        delta = np.asarray(output_grad, dtype=np.float64)
        if delta.ndim == 1:
            delta = delta[None, :]
        if delta.shape != (batch.shape[0], self.output_size):
            raise ShapeError(f"output gradient shape {delta.shape} does not fit output {self.output_size}")

        activations, pre = self._forward_cache(batch)
        n_layers = len(self.weights)
        d_weights: list[np.ndarray] = [np.empty(0)] * n_layers
        d_biases: list[np.ndarray] = [np.empty(0)] * n_layers
        for i in range(n_layers - 1, -1, -1):
            if i < n_layers - 1:
                delta = delta * _act_grad(pre[i], self.activation)
            d_weights[i] = activations[i].T @ delta
            d_biases[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
        dx = delta[0] if single else delta
        return Gradients(d_weights, d_biases), dx

    def grad_params(self, x: np.ndarray, output_grad: np.ndarray) -> Gradients:
        return self.backward(x, output_grad)[0]

    def grad_input(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the scalar output with respect to each input row."""
        if self.output_size != 1:
            raise ShapeError(f"input gradient needs a scalar output, network has {self.output_size}")
        batch, single = self._as_batch(x)
        _, dx = self.backward(batch, np.ones((batch.shape[0], 1)))
        return dx[0] if single else dx

    # ── Updates ────────────────────────────────────────────────────────

    def sgd_step(self, grads: Gradients, eta: float) -> MlpNetwork:
        """theta <- theta - eta * grad, in place; faults on non-finite parameters."""
        if len(grads.weights) != len(self.weights):
            raise ShapeError("gradient has the wrong number of layers")
        for w, b, dw, db in zip(self.weights, self.biases, grads.weights, grads.biases):
            if dw.shape != w.shape or db.shape != b.shape:
                raise ShapeError(f"gradient W{dw.shape} b{db.shape} vs parameters W{w.shape} b{b.shape}")
            w -= eta * dw
            b -= eta * db
        self.check_finite()
        return self

    def check_finite(self) -> None:
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericalFault(f"non-finite parameter in layer {i}")

    def copy(self) -> MlpNetwork:
        return MlpNetwork(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )

    def parameters(self) -> np.ndarray:
        """All parameters as one flat vector (W0, b0, W1, b1, ...)."""
        return np.concatenate([p.ravel() for pair in zip(self.weights, self.biases) for p in pair])

    def checksum(self) -> str:
        h = hashlib.sha256()
        for w, b in zip(self.weights, self.biases):
            h.update(np.ascontiguousarray(w).tobytes())
            h.update(np.ascontiguousarray(b).tobytes())
        return h.hexdigest()

    # ── Checkpoints ────────────────────────────────────────────────────

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arrays = {"version": np.array(CHECKPOINT_VERSION),
                  "layer_sizes": np.array(self.layer_sizes),
                  "activation": np.array(self.activation)}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        with open(path, "wb") as f:
            np.savez(f, **arrays)
        return path

    @classmethod
    def load(cls, path: str | Path) -> MlpNetwork:
        with np.load(Path(path), allow_pickle=False) as data:
            version = int(data["version"])
            if version != CHECKPOINT_VERSION:
                raise ConfigError(f"unsupported checkpoint version {version}", field="checkpoint")
            sizes = [int(n) for n in data["layer_sizes"]]
            n_layers = len(sizes) - 1
            weights = [data[f"W{i}"] for i in range(n_layers)]
            biases = [data[f"b{i}"] for i in range(n_layers)]
            activation = str(data["activation"])
        return cls(sizes, weights, biases, activation)


def forward(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def grad_params(net: MlpNetwork, x: np.ndarray, loss_grad_at_output: np.ndarray) -> Gradients:
    return net.grad_params(x, loss_grad_at_output)


def grad_input(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    return net.grad_input(x)


def sgd_step(net: MlpNetwork, grads: Gradients, eta: float) -> MlpNetwork:
    return net.sgd_step(grads, eta)


class TargetPair:
    """A live network and its slowly tracking target copy."""

    def __init__(self, live: MlpNetwork, tau: float, target: MlpNetwork | None = None):
        if not 0 < tau <= 1:
            raise ConfigError("must lie in (0, 1]", field="tau")
        self.live = live
        self.target = target if target is not None else live.copy()
        if self.target.layer_sizes != live.layer_sizes:
            raise ShapeError("live and target architectures differ")
        self.tau = tau

    def soft_update(self) -> TargetPair:
        """target <- (1 - tau) * target + tau * live, every parameter."""
        tau = self.tau
        pairs = zip(self.target.weights + self.target.biases, self.live.weights + self.live.biases)
        for t, l in pairs:
            if tau == 1.0:
                t[...] = l
            else:
                t += tau * (l - t)
        return self


def soft_update(pair: TargetPair) -> TargetPair:
    return pair.soft_update()
