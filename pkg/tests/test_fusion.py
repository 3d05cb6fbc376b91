"""Tests for min-max calibration, normalization and score fusion."""

import numpy as np
import pytest

from contactless_fingerprint.core.fusion import calibrate, fuse, fuse_raw, normalize, score_bounds
from contactless_fingerprint.core.models import FusionWeights, ScoreCalibration
from contactless_fingerprint.errors import CalibrationError, ParameterError


class TestCalibrate:
    """Tests for calibrate."""

    def test_direct_extrema(self):
        assert score_bounds([2, 5, 9], "embedding") == (2.0, 9.0)

    def test_identical_scores_rejected(self):
        with pytest.raises(CalibrationError, match="equal 4"):
            score_bounds([4, 4, 4], "minutiae")

    def test_single_score_rejected(self):
        with pytest.raises(CalibrationError, match="at least 2"):
            score_bounds([1.0], "embedding")

    def test_non_finite_rejected(self):
        with pytest.raises(CalibrationError, match="finite"):
            score_bounds([1.0, float("nan")], "embedding")

    def test_seeded_run_matches_recomputation(self):
        rng = np.random.default_rng(17)
        sd = rng.gamma(2.0, 1.5, size=200)
        sm = rng.integers(0, 30, size=200)
        calibration = calibrate(sd, sm)
        assert calibration == ScoreCalibration(
            min_d=float(min(sd)), max_d=float(max(sd)), min_m=float(min(sm)), max_m=float(max(sm))
        )


class TestNormalize:
    """Tests for normalize."""

    def test_bounds(self):
        assert normalize(2.0, 2.0, 9.0) == 0.0
        assert normalize(9.0, 2.0, 9.0) == 1.0
        assert normalize(5.5, 2.0, 9.0) == pytest.approx(0.5)

    def test_clamped(self):
        assert normalize(2.0 - 7, 2.0, 9.0) == 0.0
        assert normalize(100.0, 2.0, 9.0) == 1.0

    def test_arrays(self):
        np.testing.assert_allclose(normalize(np.array([0.0, 5.0, 10.0, 20.0]), 0.0, 10.0), [0.0, 0.5, 1.0, 1.0])

    def test_degenerate_range_rejected(self):
        with pytest.raises(ParameterError, match="low < high"):
            normalize(1.0, 3.0, 3.0)


class TestFuse:
    """Tests for fuse and fuse_raw."""

    def test_upper_bound(self):
        assert fuse(1.0, 1.0, FusionWeights(0.4, 0.6)) == pytest.approx(1.0)

    def test_weight_exposure(self):
        assert fuse(1.0, 0.0) == pytest.approx(0.4)
        assert fuse(0.0, 1.0) == pytest.approx(0.6)

    def test_convexity_fixpoint(self):
        assert fuse(0.5, 0.5) == pytest.approx(0.5)

    def test_range_and_monotonicity(self):
        grid = np.linspace(0.0, 1.0, 11)
        sd, sm = np.meshgrid(grid, grid, indexing="ij")
        fused = fuse(sd, sm)
        assert np.all((fused >= 0.0) & (fused <= 1.0 + 1e-12))
        assert np.all(np.diff(fused, axis=0) >= 0)
        assert np.all(np.diff(fused, axis=1) >= 0)

    def test_affine_remap_leaves_fused_scores_unchanged(self):
        """Calibrating on remapped raw scores gives the same normalized values."""
        rng = np.random.default_rng(2)
        sd, sm = rng.random(50), rng.integers(0, 20, size=50).astype(float)
        before = fuse_raw(sd, sm, calibrate(sd, sm))
        sd2, sm2 = 3.0 * sd + 7.0, 0.5 * sm - 2.0
        after = fuse_raw(sd2, sm2, calibrate(sd2, sm2))
        np.testing.assert_allclose(before, after, atol=1e-12)
        assert list(np.argsort(before, kind="stable")) == list(np.argsort(after, kind="stable"))

    def test_single_branch_weights_follow_that_branch(self):
        rng = np.random.default_rng(3)
        sd, sm = rng.random(40), rng.random(40)
        calibration = calibrate(sd, sm)
        embedding_only = fuse_raw(sd, sm, calibration, FusionWeights(1.0, 0.0))
        minutiae_only = fuse_raw(sd, sm, calibration, FusionWeights(0.0, 1.0))
        assert list(np.argsort(embedding_only)) == list(np.argsort(sd))
        assert list(np.argsort(minutiae_only)) == list(np.argsort(sm))

    def test_scalar_inputs_give_float(self):
        calibration = ScoreCalibration(min_d=0.0, max_d=2.0, min_m=0.0, max_m=10.0)
        value = fuse_raw(1.0, 5.0, calibration)
        assert isinstance(value, float)
        assert value == pytest.approx(0.5)
