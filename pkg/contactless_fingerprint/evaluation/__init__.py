"""Verification-performance evaluation.

Usage:
    from contactless_fingerprint.evaluation import DatasetEnumerator, run_evaluation, write_report

    index = DatasetEnumerator("data/", split="test").enumerate()
    report = run_evaluation(index, extractor, calibration)
    write_report(report, Path("report/"))
"""

from .dataset import DatasetEnumerator, DatasetIndex
from .metrics import ErrorCurve, FmrOperatingPoint, compute_eer, compute_fmr_n, error_curve
from .protocol import PairProtocol, generate_pairs
from .runner import EvalReport, run_evaluation, score_dataset, write_report
from .scoring_pool import ScoringPool

__all__ = [
    "DatasetEnumerator",
    "DatasetIndex",
    "ErrorCurve",
    "FmrOperatingPoint",
    "compute_eer",
    "compute_fmr_n",
    "error_curve",
    "PairProtocol",
    "generate_pairs",
    "EvalReport",
    "run_evaluation",
    "score_dataset",
    "write_report",
    "ScoringPool",
]
