"""Image containers, grayscale conversion and ridge-valley thresholding.

Images are plain numpy arrays:
- RGB photo: ``(rows, cols, 3)`` uint8
- gray image: ``(rows, cols)`` uint8
- ridge map / skeleton: ``(rows, cols)`` bool, True = ridge
"""

import logging
from pathlib import Path
from typing import Union

import cv2
import numpy as np

from ..config import DEFAULT_GLOBAL_THRESHOLD
from ..errors import IngestionError, ParameterError
from .models import ThresholdParams

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_LUMA_WEIGHTS = np.array([299, 587, 114], dtype=np.int64)


def as_rgb(img: np.ndarray) -> np.ndarray:
    """Return ``img`` as an RGB array, replicating a single gray channel."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise ParameterError(f"expected 8-bit image, got dtype {arr.dtype}")
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"expected (rows, cols, 3) image, got shape {arr.shape}")
    return arr


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """ITU-R BT.601 luma, rounded half away from zero.

    Evaluated in integer thousandths so ties round exactly: (100, 150, 200) -> 141.
    """
    rgb = as_rgb(img).astype(np.int64)
    luma = (rgb @ _LUMA_WEIGHTS + 500) // 1000
    return np.clip(luma, 0, 255).astype(np.uint8)


def _check_gray(img: np.ndarray) -> np.ndarray:
    gray = np.asarray(img)
    if gray.ndim != 2 or gray.shape[0] < 1 or gray.shape[1] < 1:
        raise ParameterError(f"expected (rows, cols) gray image, got shape {gray.shape}")
    return gray


def window_sums(gray: np.ndarray, window: int) -> np.ndarray:
    """Sum of each ``window`` x ``window`` neighbourhood under mirror padding.

    Mirroring does not repeat the edge pixel: index -1 maps to 1 and index n
    maps to n - 2.
    """
    half = window // 2
    padded = np.pad(gray.astype(np.int64), half, mode="reflect")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    integral[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    rows, cols = gray.shape
    return (
        integral[window : window + rows, window : window + cols]
        - integral[:rows, window : window + cols]
        - integral[window : window + rows, :cols]
        + integral[:rows, :cols]
    )


def adaptive_mean_threshold(img: np.ndarray, params: ThresholdParams = ThresholdParams()) -> np.ndarray:
    """Mark pixels darker than their local window mean minus the offset as ridge.

    The comparison ``gray < sum / n - C`` is evaluated as ``n * gray < sum - n * C``
    so it is exact for integer offsets.
    """
    gray = _check_gray(img)
    rows, cols = gray.shape
    params.validate_for(rows, cols)
    n = params.window * params.window
    sums = window_sums(gray, params.window)
    return n * gray.astype(np.float64) < sums - n * float(params.offset)


def global_threshold(img: np.ndarray, t: int = DEFAULT_GLOBAL_THRESHOLD) -> np.ndarray:
    """Single global cut: ridge where gray < t."""
    if not 0 <= t <= 255:
        raise ParameterError(f"global threshold must be in [0, 255], got {t}")
    return _check_gray(img) < t


def read_rgb(path: PathLike) -> np.ndarray:
    """Read a PNG/PPM/PGM photo as RGB. Gray files are channel-replicated."""
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise IngestionError("cannot read image", path)
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def read_gray(path: PathLike) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise IngestionError("cannot read image", path)
    return image


def write_rgb(path: PathLike, img: np.ndarray) -> None:
    _write(path, cv2.cvtColor(as_rgb(img), cv2.COLOR_RGB2BGR))


def write_gray(path: PathLike, img: np.ndarray) -> None:
    _write(path, np.asarray(img, dtype=np.uint8))


def ridge_map_to_gray(ridges: np.ndarray) -> np.ndarray:
    """Ridge pixels black (0), background white (255)."""
    return np.where(np.asarray(ridges, dtype=bool), 0, 255).astype(np.uint8)


def write_ridge_map(path: PathLike, ridges: np.ndarray) -> None:
    write_gray(path, ridge_map_to_gray(ridges))


def _write(path: PathLike, data: np.ndarray) -> None:
    if not cv2.imwrite(str(path), data):
        raise OSError(f"failed to write image: {path}")
    logger.debug(f"Wrote {data.shape} image to {path}")
