"""Contrastive training of the siamese branch.

Each epoch uses every genuine pair of the training images plus the same number
of randomly drawn impostor pairs, reshuffled with a seeded generator. Both
branches run as one concatenated batch, so gradients from the left and right
images sum into the shared parameters.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import BATCH_NORM_MOMENTUM
from ..errors import NonFiniteError, TrainingError
from .loss import ContrastiveConfig, contrastive_loss_batch
from .optim import AdamConfig, AdamState, adam_update
from .siamese import NetworkParams, backward, batch_statistics, forward, init_params, prepare_images

logger = logging.getLogger(__name__)

EpochCallback = Callable[[int, float], None]


@dataclass
class StepResult:
    params: NetworkParams
    loss: float


@dataclass
class TrainingResult:
    params: NetworkParams
    epoch_losses: List[float] = field(default_factory=list)
    genuine_pairs: int = 0
    elapsed_seconds: float = 0.0

    def to_dict(self):
        return {
            "epoch_losses": self.epoch_losses,
            "genuine_pairs": self.genuine_pairs,
            "elapsed_seconds": self.elapsed_seconds,
        }


def _check_finite(tensors, stage: str) -> None:
    for name, value in tensors.items():
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(name, stage)


def backward_and_step(
    params: NetworkParams,
    state: AdamState,
    left: np.ndarray,
    right: np.ndarray,
    same_class: np.ndarray,
    contrastive: ContrastiveConfig = ContrastiveConfig(),
    adam: AdamConfig = AdamConfig(),
    momentum: float = BATCH_NORM_MOMENTUM,
) -> StepResult:
    """One ADAM step on the mean contrastive loss of a batch of pairs.

    Returns new parameters; ``params`` is left untouched. Batch-norm running
    statistics move towards the statistics of the concatenated batch.
    """
    batch = np.concatenate([left, right], axis=0)
    embeddings, tape = forward(params, batch, training=True, check_finite=True)
    pairs = len(left)
    loss, d_left, d_right = contrastive_loss_batch(embeddings[:pairs], embeddings[pairs:], same_class, contrastive)
    if not np.isfinite(loss):
        raise NonFiniteError("loss", "loss")

    grads = backward(params, tape, np.concatenate([d_left, d_right], axis=0))
    ordered = {name: grads[name] for name in params.trainable_names()}
    _check_finite(ordered, "gradient")

    tensors = dict(params.tensors)
    tensors.update(adam_update(params.tensors, ordered, state, adam))
    for name, (mean, var) in batch_statistics(tape).items():
        for key, observed in ((f"{name}.running_mean", mean), (f"{name}.running_var", var)):
            tensors[key] = (momentum * tensors[key] + (1.0 - momentum) * observed).astype(tensors[key].dtype)
    _check_finite(tensors, "parameter")
    return StepResult(params=NetworkParams(params.spec, tensors), loss=loss)


def genuine_pairs(labels: Sequence[str]) -> List[Tuple[int, int]]:
    return [(a, b) for a in range(len(labels)) for b in range(a + 1, len(labels)) if labels[a] == labels[b]]


def sample_epoch_pairs(labels: Sequence[str], rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All genuine pairs plus an equal number of random impostor pairs, shuffled."""
    genuine = genuine_pairs(labels)
    if not genuine:
        raise TrainingError("training set has no genuine pairs (need >= 2 impressions of a finger)")
    if len(set(labels)) < 2:
        raise TrainingError("training set needs at least 2 fingers for impostor pairs")

    label_array = np.asarray(labels)
    impostor: List[Tuple[int, int]] = []
    while len(impostor) < len(genuine):
        need = len(genuine) - len(impostor)
        a = rng.integers(0, len(labels), size=2 * need)
        b = rng.integers(0, len(labels), size=2 * need)
        valid = label_array[a] != label_array[b]
        impostor.extend(zip(a[valid].tolist(), b[valid].tolist()))
    impostor = impostor[: len(genuine)]

    pairs = np.array(genuine + impostor, dtype=np.int64)
    same = np.concatenate([np.ones(len(genuine), dtype=bool), np.zeros(len(impostor), dtype=bool)])
    order = rng.permutation(len(pairs))
    return pairs[order, 0], pairs[order, 1], same[order]


def train(
    images: Sequence[np.ndarray],
    labels: Sequence[str],
    params: NetworkParams,
    contrastive: ContrastiveConfig = ContrastiveConfig(),
    adam: AdamConfig = AdamConfig(),
    on_epoch: Optional[EpochCallback] = None,
) -> TrainingResult:
    """Train ``params`` on photos labelled by finger id."""
    if len(images) != len(labels):
        raise TrainingError(f"{len(images)} images but {len(labels)} labels")
    start = time.monotonic()
    result = TrainingResult(params=params, genuine_pairs=len(genuine_pairs(labels)))
    if adam.epochs == 0:
        logger.warning("Training with 0 epochs: checkpoint keeps the initial parameters")
        return result

    batch = prepare_images(images, params.spec, dtype=params.dtype)
    rng = np.random.default_rng(adam.seed)
    state = AdamState()
    logger.info(
        f"Training on {len(images)} images, {result.genuine_pairs} genuine pairs per epoch, "
        f"{adam.epochs} epochs, batch {adam.batch_size}"
    )
    for epoch in range(1, adam.epochs + 1):
        epoch_start = time.monotonic()
        left_idx, right_idx, same = sample_epoch_pairs(labels, rng)
        losses = []
        for offset in range(0, len(same), adam.batch_size):
            chunk = slice(offset, offset + adam.batch_size)
            step = backward_and_step(
                result.params, state, batch[left_idx[chunk]], batch[right_idx[chunk]], same[chunk], contrastive, adam
            )
            result.params = step.params
            losses.append(step.loss)
        mean_loss = float(np.mean(losses))
        result.epoch_losses.append(mean_loss)
        logger.info(f"Epoch {epoch}/{adam.epochs}: mean loss {mean_loss:.6f} ({time.monotonic() - epoch_start:.1f}s)")
        if on_epoch:
            on_epoch(epoch, mean_loss)

    result.elapsed_seconds = time.monotonic() - start
    return result


def train_from_scratch(
    images: Sequence[np.ndarray],
    labels: Sequence[str],
    spec,
    contrastive: ContrastiveConfig = ContrastiveConfig(),
    adam: AdamConfig = AdamConfig(),
    on_epoch: Optional[EpochCallback] = None,
) -> TrainingResult:
    return train(images, labels, init_params(spec, seed=adam.seed), contrastive, adam, on_epoch)


def pair_distances(params: NetworkParams, images: Sequence[np.ndarray], labels: Sequence[str]) -> Tuple[float, float]:
    """Mean embedding distance over genuine and over impostor pairs (inference mode)."""
    embeddings, _ = forward(params, prepare_images(images, params.spec, dtype=params.dtype), training=False)
    embeddings = embeddings.astype(np.float64)
    genuine, impostor = [], []
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            distance = float(np.linalg.norm(embeddings[a] - embeddings[b]))
            (genuine if labels[a] == labels[b] else impostor).append(distance)
    return float(np.mean(genuine)), float(np.mean(impostor))
