"""Core data models for contactless fingerprint recognition.

Defines the fundamental abstractions:
- Minutia / MinutiaeSet: local ridge features as (x, y, theta, kind) plus quality
- OrientationField: block-wise ridge direction and coherence
- ScoreCalibration / FusionWeights: min-max bounds and weighted-sum fusion weights
- Template: enrolled identity (mean embedding + one minutiae set)
- VerificationResult: fused score, branch breakdown and decision
"""

import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import (
    DEFAULT_AMT_OFFSET,
    DEFAULT_AMT_WINDOW,
    DEFAULT_ANGLE_TOLERANCE,
    DEFAULT_DISTANCE_RATIO,
    DEFAULT_DISTANCE_TOLERANCE,
    DEFAULT_MAX_PAIR_DISTANCE,
    DEFAULT_W_D,
    DEFAULT_W_M,
    WEIGHT_SUM_TOLERANCE,
)
from ..errors import ParameterError


class MinutiaKind(Enum):
    """Type of a ridge anomaly."""

    TERMINATION = "termination"
    BIFURCATION = "bifurcation"


class Decision(Enum):
    """Outcome of a verification attempt."""

    MATCH = "match"
    NO_MATCH = "no-match"


@dataclass(frozen=True)
class ThresholdParams:
    """Adaptive mean thresholding parameters (window in pixels, signed offset C)."""

    window: int = DEFAULT_AMT_WINDOW
    offset: float = DEFAULT_AMT_OFFSET

    def validate_for(self, rows: int, cols: int) -> None:
        if self.window < 3 or self.window % 2 == 0:
            raise ParameterError(f"AMT window must be odd and >= 3, got {self.window}")
        if self.window > min(rows, cols):
            raise ParameterError(f"AMT window {self.window} larger than image {rows}x{cols}")


@dataclass(frozen=True)
class Minutia:
    """A ridge termination or bifurcation.

    ``x`` is the column and ``y`` the row of the skeleton pixel. ``theta`` is in
    degrees, counter-clockwise from the +x axis with y pointing up, so a
    direction toward larger row indices is 270 and toward smaller ones is 90.
    """

    x: int
    y: int
    theta: float
    kind: MinutiaKind
    quality: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x,
            "y": self.y,
            "theta": self.theta,
            "kind": self.kind.value,
            "quality": self.quality,
        }


@dataclass(frozen=True)
class MinutiaeSet:
    """Minutiae of one image, sorted by (y, x) with unique positions."""

    source_dims: Tuple[int, int]
    minutiae: Tuple[Minutia, ...] = ()

    def __post_init__(self):
        rows, cols = self.source_dims
        keys = [(m.y, m.x) for m in self.minutiae]
        if keys != sorted(keys) or len(set(keys)) != len(keys):
            raise ParameterError("minutiae must be sorted by (y, x) with unique positions")
        for m in self.minutiae:
            if not (0 <= m.x < cols and 0 <= m.y < rows):
                raise ParameterError(f"minutia ({m.x}, {m.y}) outside {rows}x{cols} image")
            if not (0.0 <= m.theta < 360.0):
                raise ParameterError(f"minutia theta {m.theta} outside [0, 360)")

    def __len__(self) -> int:
        return len(self.minutiae)

    def __iter__(self):
        return iter(self.minutiae)

    @classmethod
    def from_unsorted(cls, source_dims: Tuple[int, int], minutiae: List[Minutia]) -> "MinutiaeSet":
        return cls(source_dims=source_dims, minutiae=tuple(sorted(minutiae, key=lambda m: (m.y, m.x))))

    def count(self, kind: MinutiaKind) -> int:
        return sum(1 for m in self.minutiae if m.kind is kind)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": self.source_dims[0],
            "cols": self.source_dims[1],
            "minutiae": [m.to_dict() for m in self.minutiae],
        }


@dataclass(frozen=True)
class OrientationField:
    """Block orientation field.

    ``angles`` holds ridge directions in radians within [0, pi), counter-clockwise
    from the +x axis. ``coherence`` holds per-block reliability in [0, 1].
    """

    angles: np.ndarray
    coherence: np.ndarray
    block_size: int
    image_shape: Tuple[int, int]

    def block_of(self, row: int, col: int) -> Tuple[int, int]:
        return row // self.block_size, col // self.block_size

    def angle_at(self, row: int, col: int) -> float:
        return float(self.angles[self.block_of(row, col)])

    def coherence_at(self, row: int, col: int) -> float:
        return float(self.coherence[self.block_of(row, col)])


@dataclass(frozen=True)
class MatcherTolerances:
    """Pair-table matching tolerances."""

    max_distance: float = DEFAULT_MAX_PAIR_DISTANCE
    distance_tolerance: float = DEFAULT_DISTANCE_TOLERANCE
    distance_ratio: float = DEFAULT_DISTANCE_RATIO
    angle_tolerance: float = DEFAULT_ANGLE_TOLERANCE


@dataclass(frozen=True)
class PairTableEntry:
    """Rotation and translation invariant description of one minutiae pair."""

    i: int
    j: int
    d: float
    beta1: float
    beta2: float


@dataclass(frozen=True)
class MinutiaMatchScore:
    """Raw minutiae score S_m: the size of the consistent correspondence set."""

    value: int
    correspondences: Tuple[Tuple[int, int], ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "correspondences": [list(c) for c in self.correspondences]}


@dataclass(frozen=True)
class ScoreCalibration:
    """Min-max bounds for both branch scores."""

    min_d: float
    max_d: float
    min_m: float
    max_m: float

    def __post_init__(self):
        for name, value in self.to_dict().items():
            if not math.isfinite(value):
                raise ParameterError(f"calibration bound {name} must be finite, got {value}")
        if not self.min_d < self.max_d:
            raise ParameterError(f"min_d ({self.min_d}) must be below max_d ({self.max_d})")
        if not self.min_m < self.max_m:
            raise ParameterError(f"min_m ({self.min_m}) must be below max_m ({self.max_m})")

    def to_dict(self) -> Dict[str, float]:
        return {"min_d": self.min_d, "max_d": self.max_d, "min_m": self.min_m, "max_m": self.max_m}


@dataclass(frozen=True)
class FusionWeights:
    """Weights of the embedding (w_d) and minutiae (w_m) branches."""

    w_d: float = DEFAULT_W_D
    w_m: float = DEFAULT_W_M

    def __post_init__(self):
        if self.w_d < 0 or self.w_m < 0:
            raise ParameterError(f"fusion weights must be non-negative, got ({self.w_d}, {self.w_m})")
        if abs(self.w_d + self.w_m - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ParameterError(f"fusion weights must sum to 1, got {self.w_d + self.w_m}")

    def to_dict(self) -> Dict[str, float]:
        return {"w_d": self.w_d, "w_m": self.w_m}


@dataclass
class Template:
    """Enrolled identity."""

    user_id: str
    mean_embedding: np.ndarray
    minutiae: MinutiaeSet
    enrolled_at: datetime

    def to_dict(self) -> Dict[str, Any]:
        return {
            "user_id": self.user_id,
            "mean_embedding": [float(v) for v in self.mean_embedding],
            "minutiae": self.minutiae.to_dict(),
            "enrolled_at": self.enrolled_at.isoformat(),
        }


@dataclass
class VerificationResult:
    """Outcome of verifying one probe photo against a claimed identity."""

    user_id: str
    fused_score: float
    decision: Decision
    embedding_score: float
    minutiae_score: int
    embedding_normalized: float
    minutiae_normalized: float
    threshold: float
    correspondences: Tuple[Tuple[int, int], ...] = ()
    timings: Dict[str, float] = field(default_factory=dict)
    verified_at: Optional[datetime] = None

    @property
    def is_match(self) -> bool:
        return self.decision is Decision.MATCH

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "user_id": self.user_id,
            "fused_score": self.fused_score,
            "decision": self.decision.value,
            "embedding_score": self.embedding_score,
            "minutiae_score": self.minutiae_score,
            "embedding_normalized": self.embedding_normalized,
            "minutiae_normalized": self.minutiae_normalized,
            "threshold": self.threshold,
            "correspondences": [list(c) for c in self.correspondences],
            "timings": self.timings,
            "verified_at": self.verified_at.isoformat() if self.verified_at else None,
        }
