"""Evaluation harness: score every protocol pair under all three approaches.

The embedding, minutiae and fusion metrics come from the same cached pair
scores, so the fused results stay consistent with the branch results.
"""

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import DEFAULT_IMPOSTOR_SETS
from ..core.fusion import calibrate, fuse_raw
from ..core.matcher import match_minutiae
from ..core.models import FusionWeights, MatcherTolerances, ScoreCalibration
from ..core.pipeline import FeatureExtractor, Features
from ..network.loss import similarity
from .dataset import DatasetIndex, load_images
from .metrics import ErrorCurve, FmrOperatingPoint, compute_eer, error_curve, fmr_operating_point
from .protocol import Pair, PairProtocol, generate_pairs
from .scoring_pool import ScoringPool

logger = logging.getLogger(__name__)

APPROACHES = ("embedding", "minutiae", "fusion")


@dataclass
class PairScores:
    """Raw branch scores for the genuine and impostor pairs of a protocol."""

    genuine_d: np.ndarray
    genuine_m: np.ndarray
    impostor_d: np.ndarray
    impostor_m: np.ndarray

    def calibration(self) -> ScoreCalibration:
        return calibrate(
            np.concatenate([self.genuine_d, self.impostor_d]), np.concatenate([self.genuine_m, self.impostor_m])
        )


@dataclass
class ApproachResult:
    genuine: np.ndarray
    impostor: np.ndarray
    eer: float
    eer_threshold: float
    fmr100: FmrOperatingPoint
    fmr1000: FmrOperatingPoint
    curve: ErrorCurve

    def to_dict(self) -> Dict[str, Any]:
        return {
            "genuine_count": int(self.genuine.size),
            "impostor_count": int(self.impostor.size),
            "genuine_mean": float(self.genuine.mean()),
            "impostor_mean": float(self.impostor.mean()),
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "fmr100": self.fmr100.to_dict(),
            "fmr1000": self.fmr1000.to_dict(),
        }


@dataclass
class EvalReport:
    protocol: PairProtocol
    calibration: ScoreCalibration
    weights: FusionWeights
    approaches: Dict[str, ApproachResult]
    self_calibrated: bool = False
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fingers": self.protocol.fingers,
            "impressions_per_finger": self.protocol.impressions_per_finger,
            "impostor_impression_sets": self.protocol.impostor_impression_sets,
            "genuine_pairs": self.protocol.genuine_count,
            "impostor_pairs": self.protocol.impostor_count,
            "calibration": self.calibration.to_dict(),
            "self_calibrated": self.self_calibrated,
            "weights": self.weights.to_dict(),
            "approaches": {name: result.to_dict() for name, result in self.approaches.items()},
            "timings": self.timings,
        }


def approach_result(genuine: np.ndarray, impostor: np.ndarray) -> ApproachResult:
    curve = error_curve(genuine, impostor)
    eer, threshold = compute_eer(genuine, impostor)
    return ApproachResult(
        genuine=np.asarray(genuine, dtype=np.float64),
        impostor=np.asarray(impostor, dtype=np.float64),
        eer=eer,
        eer_threshold=threshold,
        fmr100=fmr_operating_point(curve, 100),
        fmr1000=fmr_operating_point(curve, 1000),
        curve=curve,
    )


def protocol_for(index: DatasetIndex, impostor_sets: int = DEFAULT_IMPOSTOR_SETS) -> PairProtocol:
    impressions = index.impressions_per_finger
    return PairProtocol(len(index.fingers), impressions, min(impostor_sets, impressions))


def extract_dataset_features(
    index: DatasetIndex, extractor: FeatureExtractor, pool: ScoringPool
) -> List[List[Features]]:
    """Features of every image, indexed [finger][impression]."""
    paths = [path for _, _, path in index.samples()]
    images = load_images(paths, pool)
    features = pool.map(extractor.extract, images, label="feature extraction")
    per_finger = index.impressions_per_finger
    return [features[f * per_finger : (f + 1) * per_finger] for f in range(len(index.fingers))]


def score_pairs(
    features: List[List[Features]], pairs: List[Pair], tolerances: MatcherTolerances, pool: ScoringPool
) -> Tuple[np.ndarray, np.ndarray]:
    """(S_d, S_m) arrays for ``pairs``."""

    def score(pair: Pair) -> Tuple[float, int]:
        (f1, k1), (f2, k2) = pair
        a, b = features[f1][k1], features[f2][k2]
        return similarity(a.embedding, b.embedding), match_minutiae(a.minutiae, b.minutiae, tolerances).value

    scored = pool.map(score, pairs, label="pair")
    if not scored:
        return np.zeros(0), np.zeros(0)
    sd, sm = zip(*scored)
    return np.asarray(sd, dtype=np.float64), np.asarray(sm, dtype=np.float64)


def score_dataset(
    index: DatasetIndex,
    extractor: FeatureExtractor,
    tolerances: MatcherTolerances = MatcherTolerances(),
    max_workers: int = 1,
    impostor_sets: int = DEFAULT_IMPOSTOR_SETS,
) -> Tuple[PairProtocol, PairScores]:
    protocol = protocol_for(index, impostor_sets)
    pool = ScoringPool(max_workers=max_workers)
    features = extract_dataset_features(index, extractor, pool)
    genuine, impostor = generate_pairs(protocol)
    logger.info(f"Scoring {len(genuine)} genuine and {len(impostor)} impostor pairs")
    genuine_d, genuine_m = score_pairs(features, genuine, tolerances, pool)
    impostor_d, impostor_m = score_pairs(features, impostor, tolerances, pool)
    return protocol, PairScores(genuine_d, genuine_m, impostor_d, impostor_m)


def run_evaluation(
    index: DatasetIndex,
    extractor: FeatureExtractor,
    calibration: Optional[ScoreCalibration] = None,
    weights: FusionWeights = FusionWeights(),
    tolerances: MatcherTolerances = MatcherTolerances(),
    max_workers: int = 1,
    impostor_sets: int = DEFAULT_IMPOSTOR_SETS,
) -> EvalReport:
    """Score the protocol pairs of ``index`` and compute all metrics.

    Without a calibration the bounds are taken from the evaluated scores
    themselves, which is logged as a warning.
    """
    start = time.monotonic()
    protocol, scores = score_dataset(index, extractor, tolerances, max_workers, impostor_sets)
    scored_at = time.monotonic()

    self_calibrated = calibration is None
    if self_calibrated:
        logger.warning("No calibration configured: normalizing with bounds from the evaluated scores")
        calibration = scores.calibration()

    genuine_f = fuse_raw(scores.genuine_d, scores.genuine_m, calibration, weights)
    impostor_f = fuse_raw(scores.impostor_d, scores.impostor_m, calibration, weights)
    approaches = {
        "embedding": approach_result(scores.genuine_d, scores.impostor_d),
        "minutiae": approach_result(scores.genuine_m, scores.impostor_m),
        "fusion": approach_result(genuine_f, impostor_f),
    }
    for name, result in approaches.items():
        logger.info(f"{name}: EER {100 * result.eer:.2f}% at threshold {result.eer_threshold:.6g}")

    return EvalReport(
        protocol=protocol,
        calibration=calibration,
        weights=weights,
        approaches=approaches,
        self_calibrated=self_calibrated,
        timings={"scoring": scored_at - start, "metrics": time.monotonic() - scored_at},
    )


def format_summary(report: EvalReport) -> str:
    """Text tables: EER per approach, then FMR100 / FMR1000 per approach."""
    protocol = report.protocol
    lines = [
        f"Fingers: {protocol.fingers}  Impressions per finger: {protocol.impressions_per_finger}",
        f"Comparisons: {protocol.genuine_count} genuine / {protocol.impostor_count} impostor",
        "",
        f"{'Approach':<12}{'EER (%)':>10}{'Threshold':>16}",
    ]
    for name in APPROACHES:
        result = report.approaches[name]
        lines.append(f"{name:<12}{100 * result.eer:>10.2f}{result.eer_threshold:>16.6g}")
    lines.extend(["", f"{'Approach':<12}{'FMR100':>10}{'FMR1000':>10}"])
    for name in APPROACHES:
        result = report.approaches[name]
        fmr100 = f"{result.fmr100.fnmr:.3f}" + ("" if result.fmr100.attained else "*")
        fmr1000 = f"{result.fmr1000.fnmr:.3f}" + ("" if result.fmr1000.attained else "*")
        lines.append(f"{name:<12}{fmr100:>10}{fmr1000:>10}")
    if any(not (r.fmr100.attained and r.fmr1000.attained) for r in report.approaches.values()):
        lines.append("* FMR bound not attainable; FNMR at the strictest threshold")
    if report.self_calibrated:
        lines.append("Normalization bounds were taken from the evaluated scores.")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, out_dir: Path) -> Dict[str, Path]:
    """Write scores.csv, curves.csv, summary.txt and report.json into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "scores": out_dir / "scores.csv",
        "curves": out_dir / "curves.csv",
        "summary": out_dir / "summary.txt",
        "report": out_dir / "report.json",
    }

    with open(paths["scores"], "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["approach", "kind", "score"])
        for name in APPROACHES:
            result = report.approaches[name]
            writer.writerows((name, "genuine", repr(float(s))) for s in result.genuine)
            writer.writerows((name, "impostor", repr(float(s))) for s in result.impostor)

    with open(paths["curves"], "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["approach", "threshold", "fmr", "fnmr"])
        for name in APPROACHES:
            curve = report.approaches[name].curve
            for threshold, fmr, fnmr in zip(curve.thresholds, curve.fmr, curve.fnmr):
                writer.writerow([name, repr(float(threshold)), repr(float(fmr)), repr(float(fnmr))])

    paths["summary"].write_text(format_summary(report), encoding="utf-8")
    paths["report"].write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote evaluation report to {out_dir}")
    return paths
