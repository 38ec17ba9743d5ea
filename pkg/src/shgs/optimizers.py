"""First-order optimizers with per-epoch inverse-time learning-rate decay."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

OPTIMIZERS = ("sgd", "adam", "adagrad", "nadam", "adamax")
BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-7


def effective_lr(base_lr: float, decay: float, epoch: int) -> float:
    return base_lr / (1.0 + decay * epoch)


@dataclass
class OptimizerState:
    kind: str
    base_lr: float
    decay: float = 0.0
    momentum: Optional[float] = None
    step_count: int = 0
    slots: Dict[str, List[np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if self.base_lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.decay < 0:
            raise ValueError("decay must be non-negative")

    def _slot(self, name: str, arrays: List[np.ndarray]) -> List[np.ndarray]:
        if name not in self.slots:
            self.slots[name] = [np.zeros_like(a) for a in arrays]
        return self.slots[name]


def apply_update(state: OptimizerState, params: List[np.ndarray], grads: List[np.ndarray], epoch: int) -> List[np.ndarray]:
    """Advance ``state`` by one step and return the updated parameter arrays.

    ``params`` and ``grads`` are parallel lists of arrays; slot arrays in
    ``state`` are updated in place.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    state.step_count += 1
    t = state.step_count
    lr = effective_lr(state.base_lr, state.decay, epoch)
    kind = state.kind
    out = []

    if kind == "sgd":
        mu = state.momentum or 0.0
        velocity = state._slot("velocity", params)
        for i, (w, g) in enumerate(zip(params, grads)):
            velocity[i] = mu * velocity[i] - lr * g
            out.append(w + velocity[i])
        return out

    if kind == "adagrad":
        acc = state._slot("accumulator", params)
        for i, (w, g) in enumerate(zip(params, grads)):
            acc[i] = acc[i] + g * g
            out.append(w - lr * g / (np.sqrt(acc[i]) + EPSILON))
        return out

    m = state._slot("m", params)
    if kind == "adamax":
        u = state._slot("u", params)
        step = lr / (1.0 - BETA1 ** t)
        for i, (w, g) in enumerate(zip(params, grads)):
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g
            u[i] = np.maximum(BETA2 * u[i], np.abs(g))
            out.append(w - step * m[i] / (u[i] + EPSILON))
        return out

    v = state._slot("v", params)
    bc1 = 1.0 - BETA1 ** t
    bc2 = 1.0 - BETA2 ** t
    for i, (w, g) in enumerate(zip(params, grads)):
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g
        m_hat = m[i] / bc1
        v_hat = v[i] / bc2
        if kind == "adam":
            direction = m_hat
        else:
            direction = BETA1 * m_hat + (1.0 - BETA1) * g / bc1
        out.append(w - lr * direction / (np.sqrt(v_hat) + EPSILON))
    return out
