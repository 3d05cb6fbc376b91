"""Biometric error rates: FMR/FNMR curves, EER, FMR100 and FMR1000.

Higher scores mean more similar. At threshold t an impostor comparison is a
false match when its score >= t, and a genuine comparison is a false non-match
when its score < t. Rates are computed from integer counts so threshold
selection is exact.
"""

from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from ..errors import ProtocolError


@dataclass
class ErrorCurve:
    """FMR and FNMR over ascending candidate thresholds."""

    thresholds: np.ndarray
    false_matches: np.ndarray
    false_non_matches: np.ndarray
    impostor_count: int
    genuine_count: int

    @property
    def fmr(self) -> np.ndarray:
        return self.false_matches / self.impostor_count

    @property
    def fnmr(self) -> np.ndarray:
        return self.false_non_matches / self.genuine_count

    def roc_samples(self) -> np.ndarray:
        """(FMR, 1 - FNMR) per threshold."""
        return np.column_stack([self.fmr, 1.0 - self.fnmr])

    def det_samples(self) -> np.ndarray:
        """(FMR, FNMR) per threshold."""
        return np.column_stack([self.fmr, self.fnmr])


@dataclass
class FmrOperatingPoint:
    """Lowest FNMR with FMR capped at 1 / ``bound``."""

    bound: int
    fnmr: float
    threshold: float
    attained: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"bound": self.bound, "fnmr": self.fnmr, "threshold": self.threshold, "attained": self.attained}


def _as_scores(scores: Sequence[float], kind: str) -> np.ndarray:
    values = np.asarray(scores, dtype=np.float64).ravel()
    if values.size == 0:
        raise ProtocolError(f"{kind} score list is empty")
    if not np.all(np.isfinite(values)):
        raise ProtocolError(f"{kind} scores must be finite")
    return values


def candidate_thresholds(genuine: Sequence[float], impostor: Sequence[float]) -> np.ndarray:
    """Every observed score plus the midpoints between consecutive distinct scores, ascending."""
    observed = np.unique(np.concatenate([np.asarray(genuine, float), np.asarray(impostor, float)]))
    midpoints = (observed[:-1] + observed[1:]) / 2.0
    return np.unique(np.concatenate([observed, midpoints]))


def error_curve(genuine: Sequence[float], impostor: Sequence[float]) -> ErrorCurve:
    gen = np.sort(_as_scores(genuine, "genuine"))
    imp = np.sort(_as_scores(impostor, "impostor"))
    thresholds = candidate_thresholds(gen, imp)
    false_matches = imp.size - np.searchsorted(imp, thresholds, side="left")
    false_non_matches = np.searchsorted(gen, thresholds, side="left")
    return ErrorCurve(
        thresholds=thresholds,
        false_matches=false_matches.astype(np.int64),
        false_non_matches=false_non_matches.astype(np.int64),
        impostor_count=int(imp.size),
        genuine_count=int(gen.size),
    )


def compute_eer(genuine: Sequence[float], impostor: Sequence[float]) -> Tuple[float, float]:
    """Return (EER, threshold).

    The threshold minimizes |FMR - FNMR| (ties resolve to the lower threshold)
    and EER is the mean of the two rates there.
    """
    curve = error_curve(genuine, impostor)
    ni, ng = curve.impostor_count, curve.genuine_count
    gap = np.abs(curve.false_matches * ng - curve.false_non_matches * ni)
    best = int(np.argmin(gap))
    eer = (int(curve.false_matches[best]) * ng + int(curve.false_non_matches[best]) * ni) / (2 * ni * ng)
    return float(eer), float(curve.thresholds[best])


def fmr_operating_point(curve: ErrorCurve, bound: int) -> FmrOperatingPoint:
    """Lowest FNMR over thresholds whose FMR <= 1 / bound.

    When no candidate threshold meets the bound, the strictest threshold is
    reported with ``attained`` False.
    """
    allowed = np.nonzero(curve.false_matches * bound <= curve.impostor_count)[0]
    if allowed.size:
        index = int(allowed[np.argmin(curve.false_non_matches[allowed])])
        attained = True
    else:
        index = len(curve.thresholds) - 1
        attained = False
    return FmrOperatingPoint(
        bound=bound,
        fnmr=float(curve.false_non_matches[index] / curve.genuine_count),
        threshold=float(curve.thresholds[index]),
        attained=attained,
    )


def compute_fmr_n(
    genuine: Sequence[float], impostor: Sequence[float]
) -> Tuple[FmrOperatingPoint, FmrOperatingPoint]:
    """(FMR100, FMR1000) operating points."""
    curve = error_curve(genuine, impostor)
    return fmr_operating_point(curve, 100), fmr_operating_point(curve, 1000)
