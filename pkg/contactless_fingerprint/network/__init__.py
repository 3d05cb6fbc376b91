"""Siamese embedding network implemented directly on numpy arrays.

- architecture: layer widths and input shape (``full``, ``desk``, ``tiny`` presets)
- layers: forward/backward for conv, batch norm, rectification, pooling, dense
- siamese: parameter container, forward pass, inference embedding
- loss / optim / trainer: contrastive loss, ADAM and the training loop
- checkpoint: versioned binary parameter files
"""

from .architecture import NetworkSpec
from .checkpoint import load_checkpoint, save_checkpoint
from .loss import ContrastiveConfig, contrastive_loss, similarity
from .optim import AdamConfig
from .siamese import NetworkParams, embed, forward, init_params
from .trainer import TrainingResult, train, train_from_scratch

__all__ = [
    "NetworkSpec",
    "NetworkParams",
    "ContrastiveConfig",
    "AdamConfig",
    "TrainingResult",
    "init_params",
    "forward",
    "embed",
    "contrastive_loss",
    "similarity",
    "train",
    "train_from_scratch",
    "save_checkpoint",
    "load_checkpoint",
]
