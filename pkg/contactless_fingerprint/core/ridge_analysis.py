"""Block orientation field and skeletonization of ridge maps.

Angles use image coordinates with the y axis pointing up: column index grows
along +x, row index grows along -y. A ridge running from bottom-left to
top-right has direction pi/4.
"""

import logging
import math
from typing import List

import numpy as np
from skimage.morphology import thin as _skimage_thin

from ..config import DEFAULT_BLOCK_SIZE
from ..errors import ParameterError
from .models import OrientationField

logger = logging.getLogger(__name__)

MIN_BLOCK_SIZE = 4


def _block_sums(values: np.ndarray, block_size: int) -> np.ndarray:
    row_starts = np.arange(0, values.shape[0], block_size)
    col_starts = np.arange(0, values.shape[1], block_size)
    return np.add.reduceat(np.add.reduceat(values, row_starts, axis=0), col_starts, axis=1)


def estimate_orientation(img: np.ndarray, block_size: int = DEFAULT_BLOCK_SIZE) -> OrientationField:
    """Least-squares ridge orientation per block from central-difference gradients.

    The gradient double-angle vector is averaged over each block. The ridge
    direction is perpendicular to the mean gradient direction, and coherence is
    the length of the averaged vector over the summed gradient energy (0 for
    flat blocks). Edge blocks may be partial.
    """
    if block_size < MIN_BLOCK_SIZE:
        raise ParameterError(f"block size must be >= {MIN_BLOCK_SIZE}, got {block_size}")
    gray = np.asarray(img, dtype=np.float64)
    if gray.ndim != 2:
        raise ParameterError(f"expected (rows, cols) gray image, got shape {gray.shape}")
    rows, cols = gray.shape
    if rows < block_size or cols < block_size:
        raise ParameterError(f"image {rows}x{cols} smaller than one {block_size}px block")

    d_row, d_col = np.gradient(gray)
    gx = d_col
    gy = -d_row

    vx = _block_sums(gx * gx - gy * gy, block_size)
    vy = _block_sums(2.0 * gx * gy, block_size)
    energy = _block_sums(gx * gx + gy * gy, block_size)

    angles = np.mod(0.5 * np.arctan2(vy, vx) + math.pi / 2, math.pi)
    angles[angles >= math.pi] = 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        coherence = np.where(energy > 0, np.hypot(vx, vy) / energy, 0.0)
    coherence = np.clip(coherence, 0.0, 1.0)

    logger.debug(f"Orientation field {angles.shape} from {rows}x{cols} image, block {block_size}")
    return OrientationField(angles=angles, coherence=coherence, block_size=block_size, image_shape=(rows, cols))


def orientation_to_text(field: OrientationField) -> str:
    """Debug dump: one line per block row, angles in degrees."""
    lines: List[str] = []
    for row in np.degrees(field.angles):
        lines.append(" ".join(f"{value:.2f}" for value in row))
    return "\n".join(lines) + "\n"


def _neighbours_ccw(padded: np.ndarray, r: int, c: int) -> List[bool]:
    """E, NE, N, NW, W, SW, S, SE around padded[r, c]."""
    return [
        padded[r, c + 1],
        padded[r - 1, c + 1],
        padded[r - 1, c],
        padded[r - 1, c - 1],
        padded[r, c - 1],
        padded[r + 1, c - 1],
        padded[r + 1, c],
        padded[r + 1, c + 1],
    ]


def is_simple(padded: np.ndarray, r: int, c: int) -> bool:
    """Yokoi 8-connectivity number equals 1: deleting the pixel keeps topology."""
    x = [not v for v in _neighbours_ccw(padded, r, c)]
    x.append(x[0])
    x.append(x[1])
    number = sum(int(x[k]) - int(x[k] and x[k + 1] and x[k + 2]) for k in (0, 2, 4, 6))
    return number == 1


def _remove_square_corners(skeleton: np.ndarray) -> np.ndarray:
    padded = np.pad(skeleton, 1, mode="constant", constant_values=False)
    squares = padded[:-1, :-1] & padded[1:, :-1] & padded[:-1, 1:] & padded[1:, 1:]
    for r, c in zip(*np.nonzero(squares)):
        block = ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1))
        if not all(padded[p] for p in block):
            continue
        for pr, pc in block:
            if is_simple(padded, pr, pc):
                padded[pr, pc] = False
                break
    return padded[1:-1, 1:-1]


def thin(ridges: np.ndarray) -> np.ndarray:
    """Thin a ridge map to a one-pixel-wide, topology-preserving skeleton.

    Guo-Hall peeling is followed by removal of one simple pixel from every
    fully set 2x2 square, repeated until nothing changes. A square whose four
    pixels are all non-simple is left in place.
    """
    current = np.asarray(ridges, dtype=bool)
    if current.ndim != 2:
        raise ParameterError(f"expected (rows, cols) ridge map, got shape {current.shape}")
    if not current.any():
        return current.copy()
    iterations = 0
    while True:
        iterations += 1
        thinned = _remove_square_corners(_skimage_thin(current))
        if np.array_equal(thinned, current):
            break
        current = thinned
    logger.debug(f"Thinning reached fixpoint after {iterations} passes")
    return current
