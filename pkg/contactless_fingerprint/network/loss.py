"""Contrastive loss and embedding similarity.

Same-class pairs are pulled together (loss D^2 / 2); different-class pairs are
pushed beyond the margin (loss max(0, m - D)^2 / 2).
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..config import DEFAULT_MARGIN, SIMILARITY_EPSILON
from ..errors import ParameterError


@dataclass(frozen=True)
class ContrastiveConfig:
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if not self.margin > 0:
            raise ParameterError(f"contrastive margin must be positive, got {self.margin}")


def euclidean_distance(e1: np.ndarray, e2: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(e1, dtype=np.float64) - np.asarray(e2, dtype=np.float64)))


def contrastive_loss(
    e1: np.ndarray, e2: np.ndarray, same_class: bool, cfg: ContrastiveConfig = ContrastiveConfig()
) -> float:
    distance = euclidean_distance(e1, e2)
    if same_class:
        return 0.5 * distance * distance
    gap = max(0.0, cfg.margin - distance)
    return 0.5 * gap * gap


def contrastive_loss_batch(
    left: np.ndarray, right: np.ndarray, same_class: np.ndarray, cfg: ContrastiveConfig = ContrastiveConfig()
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Mean loss over a batch of pairs and its gradients w.r.t. both embeddings.

    The gradient of a different-class pair at zero distance is taken as zero.
    """
    same = np.asarray(same_class, dtype=bool)
    diff = left - right
    distance = np.sqrt(np.sum(diff * diff, axis=1))
    gap = np.maximum(0.0, cfg.margin - distance)
    losses = np.where(same, 0.5 * distance * distance, 0.5 * gap * gap)
    count = len(same)

    with np.errstate(divide="ignore", invalid="ignore"):
        push = np.where((gap > 0) & (distance > 0), -gap / distance, 0.0)
    coefficient = np.where(same, 1.0, push) / count
    d_left = (coefficient[:, None] * diff).astype(left.dtype, copy=False)
    return float(losses.mean()), d_left, -d_left


def similarity(e1: np.ndarray, e2: np.ndarray, epsilon: float = SIMILARITY_EPSILON) -> float:
    """S_d = 1 / (D + epsilon)."""
    return 1.0 / (euclidean_distance(e1, e2) + epsilon)
