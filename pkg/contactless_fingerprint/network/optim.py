"""ADAM optimizer with bias-corrected moment estimates."""

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from ..config import (
    DEFAULT_ADAM_BETA1,
    DEFAULT_ADAM_BETA2,
    DEFAULT_ADAM_EPSILON,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_SEED,
)
from ..errors import ParameterError


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_ADAM_BETA1
    beta2: float = DEFAULT_ADAM_BETA2
    epsilon: float = DEFAULT_ADAM_EPSILON
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ParameterError(f"ADAM betas must be in (0, 1), got ({self.beta1}, {self.beta2})")
        if not self.learning_rate > 0:
            raise ParameterError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ParameterError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass
class AdamState:
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_update(
    tensors: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdamState, cfg: AdamConfig
) -> Dict[str, np.ndarray]:
    """Return updated copies of the tensors named in ``grads``; advances ``state`` in place."""
    state.step += 1
    correction1 = 1.0 - cfg.beta1**state.step
    correction2 = 1.0 - cfg.beta2**state.step
    updated = {}
    for name, grad in grads.items():
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(grad)
            v = np.zeros_like(grad)
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v
        step = cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.epsilon)
        updated[name] = (tensors[name] - step).astype(tensors[name].dtype, copy=False)
    return updated
