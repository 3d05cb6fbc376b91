"""Tests for block orientation estimation and thinning."""

import math

import numpy as np
import pytest
from scipy import ndimage

from contactless_fingerprint.core.ridge_analysis import estimate_orientation, orientation_to_text, thin
from contactless_fingerprint.errors import ParameterError

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def grating(alpha_degrees: float, wavelength: float = 10.0, shape=(64, 64)) -> np.ndarray:
    """Sinusoidal ridges running at ``alpha`` (counter-clockwise, y up)."""
    rows, cols = shape
    y, x = np.mgrid[0:rows, 0:cols].astype(float)
    alpha = math.radians(alpha_degrees)
    values = 128 + 100 * np.cos(2 * math.pi * (x * math.sin(alpha) + y * math.cos(alpha)) / wavelength)
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)


def axial_error_degrees(angles: np.ndarray, expected_degrees: float) -> np.ndarray:
    diff = np.abs(np.degrees(angles) - expected_degrees) % 180.0
    return np.minimum(diff, 180.0 - diff)


def random_blobs(seed: int, shape=(48, 48)) -> np.ndarray:
    noise = np.random.default_rng(seed).standard_normal(shape)
    return ndimage.gaussian_filter(noise, sigma=2.0) > 0.1


def has_full_square(skeleton: np.ndarray) -> bool:
    return bool((skeleton[:-1, :-1] & skeleton[1:, :-1] & skeleton[:-1, 1:] & skeleton[1:, 1:]).any())


class TestOrientation:
    """Tests for estimate_orientation."""

    def test_vertical_stripes(self):
        """Columns alternating dark/light give pi/2."""
        img = np.tile(np.array([0, 0, 0, 255, 255, 255], dtype=np.uint8), (48, 8))
        field = estimate_orientation(img, 16)
        coherent = field.coherence > 0.5
        assert coherent.any()
        assert np.all(np.abs(field.angles[coherent] - math.pi / 2) < 0.05)

    def test_horizontal_stripes(self):
        """Rows alternating dark/light give 0 (mod pi)."""
        img = np.tile(np.array([0, 0, 0, 255, 255, 255], dtype=np.uint8)[:, None], (8, 48))
        field = estimate_orientation(img, 16)
        coherent = field.coherence > 0.5
        assert coherent.any()
        assert np.all(axial_error_degrees(field.angles[coherent], 0.0) < math.degrees(0.05))

    @pytest.mark.parametrize("alpha", [0.0, 30.0, 45.0, 60.0, 90.0])
    def test_grating_recovery(self, alpha):
        """Mean block error stays within 3 degrees on coherent blocks."""
        field = estimate_orientation(grating(alpha), 16)
        coherent = field.coherence > 0.5
        assert coherent.sum() >= 8
        assert axial_error_degrees(field.angles[coherent], alpha).mean() <= 3.0

    @pytest.mark.parametrize("delta", [15.0, 30.0, 60.0])
    def test_rotation_equivariance(self, delta):
        """Rotating the grating by delta rotates the estimate by delta."""
        base = estimate_orientation(grating(20.0), 16)
        rotated = estimate_orientation(grating(20.0 + delta), 16)
        shift = np.degrees(rotated.angles - base.angles)
        assert np.all(axial_error_degrees(np.radians(shift), delta) < 3.0)

    def test_negative_image_agrees(self):
        """The photometric negative has the same orientation field."""
        img = grating(35.0)
        np.testing.assert_allclose(estimate_orientation(img).angles, estimate_orientation(255 - img).angles)

    def test_flat_image_has_zero_coherence(self):
        """Blocks without gradient are marked unreliable."""
        field = estimate_orientation(np.full((32, 32), 90, dtype=np.uint8))
        assert np.all(field.coherence == 0.0)

    def test_field_invariants(self):
        """Block grid is ceil(rows / block) and values stay in range."""
        field = estimate_orientation(grating(70.0, shape=(50, 40)), 16)
        assert field.angles.shape == (4, 3)
        assert np.all((field.angles >= 0) & (field.angles < math.pi))
        assert np.all((field.coherence >= 0) & (field.coherence <= 1))

    def test_image_smaller_than_block_rejected(self):
        with pytest.raises(ParameterError, match="smaller than one"):
            estimate_orientation(np.zeros((10, 10), dtype=np.uint8), 16)

    def test_block_size_below_minimum_rejected(self):
        with pytest.raises(ParameterError, match="block size"):
            estimate_orientation(np.zeros((32, 32), dtype=np.uint8), 3)

    def test_text_dump(self):
        """One line per block row, degrees with two decimals."""
        text = orientation_to_text(estimate_orientation(grating(90.0), 16))
        lines = text.strip().splitlines()
        assert len(lines) == 4
        assert all(len(line.split()) == 4 for line in lines)
        assert lines[1].split()[1] == "90.00"


class TestThinning:
    """Tests for thin."""

    def test_empty_map(self):
        ridges = np.zeros((10, 10), dtype=bool)
        assert not thin(ridges).any()

    def test_thin_diagonal_unchanged(self):
        """A one-pixel diagonal line is already thin."""
        ridges = np.zeros((12, 12), dtype=bool)
        for k in range(2, 10):
            ridges[k, k] = True
        np.testing.assert_array_equal(thin(ridges), ridges)

    def test_thick_bar_to_centerline(self):
        """A 3x20 bar thins to its middle row."""
        ridges = np.zeros((11, 30), dtype=bool)
        ridges[4:7, 5:25] = True
        skeleton = thin(ridges)
        for col in range(7, 23):
            assert skeleton[:, col].tolist().count(True) == 1
            assert skeleton[5, col]
        cols = np.nonzero(skeleton.any(axis=0))[0]
        assert cols.min() <= 7 and cols.max() >= 22
        assert not np.any(skeleton & ~ridges)

    @pytest.mark.parametrize("seed", range(6))
    def test_idempotent(self, seed):
        skeleton = thin(random_blobs(seed))
        np.testing.assert_array_equal(thin(skeleton), skeleton)

    @pytest.mark.parametrize("seed", range(6))
    def test_preserves_component_count(self, seed):
        ridges = random_blobs(seed)
        _, before = ndimage.label(ridges, structure=EIGHT_CONNECTED)
        _, after = ndimage.label(thin(ridges), structure=EIGHT_CONNECTED)
        assert after == before

    def test_one_pixel_wide(self):
        """No fully set 2x2 square survives on thick shapes."""
        y, x = np.mgrid[0:60, 0:60]
        ring = (np.hypot(x - 30, y - 30) < 20) & (np.hypot(x - 30, y - 30) > 12)
        rectangle = np.zeros((40, 60), dtype=bool)
        rectangle[10:20, 10:50] = True
        band = np.abs(x - y) < 4
        for shape in (ring, rectangle, band):
            skeleton = thin(shape)
            assert skeleton.any()
            assert not has_full_square(skeleton)
            assert not np.any(skeleton & ~shape)
