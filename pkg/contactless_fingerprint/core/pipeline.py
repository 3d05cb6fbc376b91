"""Feature extraction: finger photo -> (embedding, minutiae).

Minutiae branch: grayscale -> adaptive mean threshold -> thinning -> block
orientation on the grayscale image -> crossing-number minutiae.
Embedding branch: a pluggable embedder, normally the trained siamese network.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..config import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_BORDER_MARGIN,
    DEFAULT_COHERENCE_THRESHOLD,
    DEFAULT_MERGE_RADIUS,
)
from ..network.siamese import NetworkParams, embed
from .imaging import adaptive_mean_threshold, as_rgb, to_grayscale
from .minutiae import extract_minutiae
from .models import MinutiaeSet, OrientationField, ThresholdParams
from .ridge_analysis import estimate_orientation, thin

logger = logging.getLogger(__name__)


class BaseEmbedder(ABC):
    """Abstract base class for global-feature embedders."""

    @abstractmethod
    def embed(self, photo: np.ndarray) -> np.ndarray:
        """Embedding vector of one RGB (or gray) photo."""
        pass

    @abstractmethod
    def get_name(self) -> str:
        pass


class SiameseEmbedder(BaseEmbedder):
    """Inference-mode siamese branch. Safe to share between threads."""

    def __init__(self, params: NetworkParams):
        self.params = params

    def embed(self, photo: np.ndarray) -> np.ndarray:
        return embed(self.params, photo)

    def get_name(self) -> str:
        rows, cols, _ = self.params.spec.input_shape
        return f"siamese-{rows}x{cols}"


@dataclass
class MinutiaeStages:
    """Intermediate rasters of the minutiae branch."""

    gray: np.ndarray
    ridges: np.ndarray
    skeleton: np.ndarray
    field: OrientationField
    minutiae: MinutiaeSet
    timings: Dict[str, float] = field(default_factory=dict)


@dataclass
class Features:
    embedding: np.ndarray
    minutiae: MinutiaeSet
    timings: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MinutiaeSettings:
    threshold: ThresholdParams = ThresholdParams()
    block_size: int = DEFAULT_BLOCK_SIZE
    border_margin: int = DEFAULT_BORDER_MARGIN
    coherence_threshold: float = DEFAULT_COHERENCE_THRESHOLD
    merge_radius: float = DEFAULT_MERGE_RADIUS


class FeatureExtractor:
    """Runs both branches on a photo and records per-stage latencies in seconds."""

    def __init__(self, embedder: Optional[BaseEmbedder], settings: MinutiaeSettings = MinutiaeSettings()):
        self.embedder = embedder
        self.settings = settings

    def minutiae_stages(self, photo: np.ndarray) -> MinutiaeStages:
        timings: Dict[str, float] = {}

        def timed(name, fn, *args, **kwargs):
            start = time.perf_counter()
            value = fn(*args, **kwargs)
            timings[name] = time.perf_counter() - start
            return value

        s = self.settings
        gray = timed("grayscale", to_grayscale, as_rgb(photo))
        ridges = timed("threshold", adaptive_mean_threshold, gray, s.threshold)
        skeleton = timed("thinning", thin, ridges)
        orientation = timed("orientation", estimate_orientation, gray, s.block_size)
        minutiae = timed(
            "minutiae",
            extract_minutiae,
            skeleton,
            orientation,
            border_margin=s.border_margin,
            coherence_threshold=s.coherence_threshold,
            merge_radius=s.merge_radius,
        )
        return MinutiaeStages(gray, ridges, skeleton, orientation, minutiae, timings)

    def extract_minutiae(self, photo: np.ndarray) -> MinutiaeSet:
        return self.minutiae_stages(photo).minutiae

    def embed(self, photo: np.ndarray) -> np.ndarray:
        if self.embedder is None:
            raise RuntimeError("feature extractor has no embedder configured")
        return self.embedder.embed(photo)

    def extract(self, photo: np.ndarray) -> Features:
        stages = self.minutiae_stages(photo)
        start = time.perf_counter()
        embedding = self.embed(photo)
        timings = dict(stages.timings)
        timings["embedding"] = time.perf_counter() - start
        logger.debug(f"Extracted {len(stages.minutiae)} minutiae; stage timings {timings}")
        return Features(embedding=embedding, minutiae=stages.minutiae, timings=timings)
