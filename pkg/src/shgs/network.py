"""Dense feed-forward binary classifier with hand-derived gradients.

The network maps ``input_dim`` features through ``hidden_layer_count`` equally
wide hidden layers to two sigmoid output units (negative, positive). The first
hidden layer uses ``input_activation``; deeper hidden layers use
``hidden_activation``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.special import expit

ACTIVATIONS = ("relu", "sigmoid", "softmax", "tanh")
INITIALIZERS = ("constant", "glorot_normal", "glorot_uniform", "he_normal", "he_uniform")
OUTPUT_DIM = 2
POSITIVE_UNIT = 1
PROB_CLIP = 1e-7


@dataclass(frozen=True)
class NetworkArchitecture:
    input_dim: int
    hidden_layer_count: int = 1
    hidden_nodes: int = 8
    input_activation: str = "relu"
    hidden_activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.hidden_layer_count not in (1, 2, 3, 4):
            raise ValueError("hidden_layer_count must be 1, 2, 3 or 4")
        if self.hidden_nodes < 1:
            raise ValueError("hidden_nodes must be positive")
        for act in (self.input_activation, self.hidden_activation):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.input_dim] + [self.hidden_nodes] * self.hidden_layer_count + [OUTPUT_DIM]

    @property
    def activations(self) -> List[str]:
        hidden = [self.input_activation] + [self.hidden_activation] * (self.hidden_layer_count - 1)
        return hidden + ["sigmoid"]

    @property
    def n_parameters(self) -> int:
        sizes = self.layer_sizes
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


@dataclass
class NetworkParameters:
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def arrays(self) -> List[np.ndarray]:
        return list(self.weights) + list(self.biases)

    @classmethod
    def from_arrays(cls, arrays: List[np.ndarray]) -> "NetworkParameters":
        half = len(arrays) // 2
        return cls(list(arrays[:half]), list(arrays[half:]))

    def copy(self) -> "NetworkParameters":
        return NetworkParameters([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())


# Gradients share the parameter layout exactly.
Gradients = NetworkParameters


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: List[np.ndarray]
    activations: List[np.ndarray]
    masks: Optional[List[np.ndarray]]

    @property
    def outputs(self) -> np.ndarray:
        return self.activations[-1]


def initialize(arch: NetworkArchitecture, initializer: str = "glorot_uniform", seed=0) -> NetworkParameters:
    if initializer not in INITIALIZERS:
        raise ValueError(f"unknown initializer {initializer!r}")
    rng = np.random.default_rng(seed)
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        shape = (fan_in, fan_out)
        if initializer == "constant":
            w = np.zeros(shape)
        elif initializer == "glorot_uniform":
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=shape)
        elif initializer == "glorot_normal":
            w = rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=shape)
        elif initializer == "he_uniform":
            limit = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-limit, limit, size=shape)
        else:
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return NetworkParameters(weights, biases)


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return expit(z)
    if name == "tanh":
        return np.tanh(z)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _activation_backward(name: str, z: np.ndarray, a: np.ndarray, grad_a: np.ndarray) -> np.ndarray:
    """Map dL/da to dL/dz for one layer."""
    if name == "relu":
        return grad_a * (z > 0)
    if name == "sigmoid":
        return grad_a * a * (1.0 - a)
    if name == "tanh":
        return grad_a * (1.0 - a * a)
    # softmax Jacobian-vector product, row-wise
    return a * (grad_a - np.sum(grad_a * a, axis=1, keepdims=True))


def sample_masks(arch: NetworkArchitecture, p: float, rng, n_rows: int = 1) -> Optional[List[np.ndarray]]:
    """Draw inverted-dropout masks for every hidden layer.

    Masks have shape ``(n_rows, hidden_nodes)``; kept entries equal ``1/(1-p)``.
    Returns ``None`` when ``p == 0``.
    """
    if not 0.0 <= p <= 0.9:
        raise ValueError("dropout rate must lie in [0, 0.9]")
    if p == 0.0:
        return None
    scale = 1.0 / (1.0 - p)
    return [
        (rng.random((n_rows, arch.hidden_nodes)) >= p) * scale
        for _ in range(arch.hidden_layer_count)
    ]


def forward(arch: NetworkArchitecture, params: NetworkParameters, batch, masks=None) -> ForwardCache:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise ValueError(f"expected batch with {arch.input_dim} columns, got shape {x.shape}")
    acts = arch.activations
    pre, post = [], []
    a = x
    n_layers = len(params.weights)
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        a = _activate(acts[layer], z)
        if masks is not None and layer < n_layers - 1:
            a = a * masks[layer]
        pre.append(z)
        post.append(a)
    return ForwardCache(x, pre, post, masks)


def penalty(params: NetworkParameters, l1: float, l2: float) -> float:
    total = 0.0
    for w in params.weights:
        if l1:
            total += l1 * np.abs(w).sum()
        if l2:
            total += l2 * np.square(w).sum()
    return float(total)


def _one_hot_targets(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64).ravel()
    return np.column_stack([1.0 - y, y])


def loss(outputs, labels, params: Optional[NetworkParameters] = None, l1: float = 0.0, l2: float = 0.0) -> float:
    """Binary cross-entropy averaged over samples and both output units, plus L1/L2."""
    p = np.clip(np.asarray(outputs, dtype=np.float64), PROB_CLIP, 1.0 - PROB_CLIP)
    y = _one_hot_targets(labels)
    data = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    if params is None:
        return float(data)
    return float(data) + penalty(params, l1, l2)


def backward(
    arch: NetworkArchitecture,
    params: NetworkParameters,
    cache: Optional[ForwardCache],
    labels,
    l1: float = 0.0,
    l2: float = 0.0,
) -> Gradients:
    """Exact gradient of :func:`loss` evaluated on ``cache.outputs``."""
    if cache is None or len(cache.activations) != len(params.weights):
        raise ValueError("backward needs the cache of a matching forward call")
    p = cache.outputs
    y = _one_hot_targets(labels)
    if y.shape != p.shape:
        raise ValueError("labels do not match the cached batch")
    # sigmoid and cross-entropy combine to (p - y); clipped probabilities are flat
    inside = (p > PROB_CLIP) & (p < 1.0 - PROB_CLIP)
    delta = (p - y) * inside / p.size

    acts = arch.activations
    n_layers = len(params.weights)
    grad_w: List[np.ndarray] = [None] * n_layers
    grad_b: List[np.ndarray] = [None] * n_layers
    for layer in range(n_layers - 1, -1, -1):
        a_prev = cache.inputs if layer == 0 else cache.activations[layer - 1]
        grad_w[layer] = a_prev.T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer == 0:
            break
        grad_a = delta @ params.weights[layer].T
        prev = layer - 1
        if cache.masks is not None:
            grad_a = grad_a * cache.masks[prev]
            # cached activation is post-mask; recover the raw activation
            raw = _activate(acts[prev], cache.pre_activations[prev])
        else:
            raw = cache.activations[prev]
        delta = _activation_backward(acts[prev], cache.pre_activations[prev], raw, grad_a)

    for layer, w in enumerate(params.weights):
        if l1:
            grad_w[layer] = grad_w[layer] + l1 * np.sign(w)
        if l2:
            grad_w[layer] = grad_w[layer] + 2.0 * l2 * w
    return NetworkParameters(grad_w, grad_b)


def predict(arch: NetworkArchitecture, params: NetworkParameters, features) -> np.ndarray:
    """Positive-class score per row; dropout is never applied here."""
    return forward(arch, params, features).outputs[:, POSITIVE_UNIT]
