"""Min-max score normalization and weighted-sum fusion of the two branches."""

from typing import Iterable, Tuple

import numpy as np

from ..errors import CalibrationError, ParameterError
from .models import FusionWeights, ScoreCalibration


def score_bounds(scores: Iterable[float], branch: str) -> Tuple[float, float]:
    values = np.asarray(list(scores), dtype=np.float64)
    if values.size < 2:
        raise CalibrationError(f"{branch} branch needs at least 2 calibration scores, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise CalibrationError(f"{branch} branch calibration scores must be finite")
    low, high = float(values.min()), float(values.max())
    if low == high:
        raise CalibrationError(f"all {branch} branch calibration scores equal {low}")
    return low, high


def calibrate(embedding_scores: Iterable[float], minutiae_scores: Iterable[float]) -> ScoreCalibration:
    """Observed extrema of each branch over a calibration set of comparisons."""
    min_d, max_d = score_bounds(embedding_scores, "embedding")
    min_m, max_m = score_bounds(minutiae_scores, "minutiae")
    return ScoreCalibration(min_d=min_d, max_d=max_d, min_m=min_m, max_m=max_m)


def normalize(score, low: float, high: float):
    """(score - low) / (high - low), clamped to [0, 1]. Accepts scalars or arrays."""
    if not low < high:
        raise ParameterError(f"normalization needs low < high, got ({low}, {high})")
    value = np.clip((np.asarray(score, dtype=np.float64) - low) / (high - low), 0.0, 1.0)
    return float(value) if value.ndim == 0 else value


def fuse(sd_norm, sm_norm, weights: FusionWeights = FusionWeights()):
    """S_f = w_d * Sd_norm + w_m * Sm_norm."""
    fused = weights.w_d * np.asarray(sd_norm, dtype=np.float64) + weights.w_m * np.asarray(sm_norm, dtype=np.float64)
    return float(fused) if fused.ndim == 0 else fused


def fuse_raw(sd, sm, calibration: ScoreCalibration, weights: FusionWeights = FusionWeights()):
    """Normalize both raw branch scores with ``calibration`` and fuse them."""
    return fuse(
        normalize(sd, calibration.min_d, calibration.max_d),
        normalize(sm, calibration.min_m, calibration.max_m),
        weights,
    )
