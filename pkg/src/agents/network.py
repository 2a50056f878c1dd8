"""Dense tanh networks with exact backpropagation and an Adam optimizer."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

ACTIVATIONS = ("tanh", "identity")


def masked_softmax(logits: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Softmax over the last axis with masked entries forced to exactly zero."""
    logits = np.asarray(logits, dtype=np.float64)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        logits = np.where(mask, logits, -np.inf)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


class DenseNetwork:
    """Feed-forward stack: affine layers, each followed by its activation tag.

    Inputs are row vectors (batch, in); weights are stored as (in, out). The
    policy networks keep an identity last layer and apply the masked softmax
    outside, so `forward` always returns the pre-softmax output.
    """

    def __init__(self, layer_sizes: Sequence[int], activations: Optional[Sequence[str]] = None,
                 seed: int = 0, output_scale: float = 1.0):
        if len(layer_sizes) < 2:
            raise ValueError("a network needs at least an input and an output size")
        self.layer_sizes = [int(n) for n in layer_sizes]
        n_layers = len(self.layer_sizes) - 1
        if activations is None:
            activations = ["tanh"] * (n_layers - 1) + ["identity"]
        if len(activations) != n_layers or any(a not in ACTIVATIONS for a in activations):
            raise ValueError(f"need {n_layers} activation tags from {ACTIVATIONS}, got {activations}")
        self.activations = list(activations)
        self.seed = seed

        rng = np.random.default_rng(seed)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.biases.append(np.zeros(n_out))
        self.weights[-1] *= output_scale

    @classmethod
    def with_hidden(cls, input_size: int, hidden: int, output_size: int, depth: int = 3,
                    seed: int = 0, output_scale: float = 1.0) -> "DenseNetwork":
        """Input -> `depth` tanh layers of width `hidden` -> identity output."""
        return cls([input_size] + [hidden] * depth + [output_size], seed=seed,
                   output_scale=output_scale)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> List[np.ndarray]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def forward_cached(self, x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """Forward pass keeping every layer's output for `backward`."""
        a = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if a.shape[1] != self.input_size:
            raise ValueError(f"input width {a.shape[1]} != network input size {self.input_size}")
        cache = [a]
        for w, b, act in zip(self.weights, self.biases, self.activations):
            z = a @ w + b
            a = np.tanh(z) if act == "tanh" else z
            cache.append(a)
        return a, cache

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out, _ = self.forward_cached(x)
        return out[0] if x.ndim == 1 else out

    def backward(self, cache: List[np.ndarray], grad_output: np.ndarray) -> List[np.ndarray]:
        """Gradients of a scalar loss, given dLoss/dOutput, in `parameters()` order."""
        delta = np.atleast_2d(np.asarray(grad_output, dtype=np.float64))
        grads: List[np.ndarray] = [None] * (2 * len(self.weights))
        for layer in reversed(range(len(self.weights))):
            out = cache[layer + 1]
            if self.activations[layer] == "tanh":
                delta = delta * (1.0 - out ** 2)
            grads[2 * layer] = cache[layer].T @ delta
            grads[2 * layer + 1] = delta.sum(axis=0)
            if layer:
                delta = delta @ self.weights[layer].T
        return grads

    def copy(self) -> "DenseNetwork":
        clone = DenseNetwork.__new__(DenseNetwork)
        clone.layer_sizes = list(self.layer_sizes)
        clone.activations = list(self.activations)
        clone.seed = self.seed
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def blend_from(self, other: "DenseNetwork", tau: float):
        """In place: self <- (1 - tau) * self + tau * other."""
        for mine, theirs in zip(self.parameters(), other.parameters()):
            mine *= (1.0 - tau)
            mine += tau * theirs

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layer_sizes": self.layer_sizes,
            "activations": self.activations,
            "seed": self.seed,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DenseNetwork":
        net = cls.__new__(cls)
        net.layer_sizes = [int(n) for n in data["layer_sizes"]]
        net.activations = list(data["activations"])
        net.seed = data.get("seed", 0)
        net.weights = [np.array(w, dtype=np.float64).reshape(n_in, n_out)
                       for w, n_in, n_out in zip(data["weights"], net.layer_sizes[:-1],
                                                 net.layer_sizes[1:])]
        net.biases = [np.array(b, dtype=np.float64) for b in data["biases"]]
        return net


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g ** 2).sum()) for g in grads)))


@dataclass
class AdamOptimizer:
    """Adam with bias correction and optional global-norm gradient clipping."""
    params: List[np.ndarray] = field(repr=False)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: Optional[float] = None
    step_count: int = 0
    m: List[np.ndarray] = field(default_factory=list, repr=False)
    v: List[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.m:
            self.m = [np.zeros_like(p) for p in self.params]
            self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> float:
        """Update the parameters in place; returns the pre-clipping gradient norm."""
        if len(grads) != len(self.params):
            raise ValueError(f"expected {len(self.params)} gradients, got {len(grads)}")
        norm = global_norm(grads)
        scale = 1.0
        if self.clip_norm is not None and norm > self.clip_norm:
            scale = self.clip_norm / norm

        self.step_count += 1
        t = self.step_count
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            g = g * scale
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        return norm

    def to_dict(self) -> Dict[str, Any]:
        return {
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "clip_norm": self.clip_norm,
            "step_count": self.step_count,
            "m": [a.tolist() for a in self.m],
            "v": [a.tolist() for a in self.v],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], params: List[np.ndarray]) -> "AdamOptimizer":
        return cls(
            params=params,
            learning_rate=data["learning_rate"],
            beta1=data["beta1"],
            beta2=data["beta2"],
            eps=data["eps"],
            clip_norm=data["clip_norm"],
            step_count=data["step_count"],
            m=[np.array(a, dtype=np.float64).reshape(p.shape) for a, p in zip(data["m"], params)],
            v=[np.array(a, dtype=np.float64).reshape(p.shape) for a, p in zip(data["v"], params)],
        )
