"""Crossing-number minutiae detection on a one-pixel skeleton.

Functional stand-in for an NBIS-style detector: every skeleton pixel with
crossing number 1 is a ridge termination, 3 a bifurcation.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import (
    DEFAULT_BORDER_MARGIN,
    DEFAULT_COHERENCE_THRESHOLD,
    DEFAULT_MERGE_RADIUS,
    DIRECTION_TRACE_LENGTH,
)
from ..errors import ParameterError
from .models import Minutia, MinutiaeSet, MinutiaKind, OrientationField

logger = logging.getLogger(__name__)

FORMAT_TAG = "MINUTIAE"
FORMAT_VERSION = "v1"

# N, NE, E, SE, S, SW, W, NW as (d_row, d_col)
NEIGHBOUR_OFFSETS: Tuple[Tuple[int, int], ...] = (
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
)

_KIND_BY_CN = {1: MinutiaKind.TERMINATION, 3: MinutiaKind.BIFURCATION}


def crossing_number(neighborhood: np.ndarray) -> int:
    """Half the number of 0/1 transitions around the 8-neighbourhood of a set center."""
    block = np.asarray(neighborhood, dtype=bool)
    if block.shape != (3, 3):
        raise ParameterError(f"expected 3x3 neighbourhood, got shape {block.shape}")
    if not block[1, 1]:
        raise ParameterError("crossing number is defined for skeleton pixels only")
    ring = [int(block[1 + dr, 1 + dc]) for dr, dc in NEIGHBOUR_OFFSETS]
    return sum(abs(ring[i] - ring[(i + 1) % 8]) for i in range(8)) // 2


def crossing_number_map(skeleton: np.ndarray) -> np.ndarray:
    """Crossing number of every skeleton pixel (0 off the skeleton)."""
    sk = np.asarray(skeleton, dtype=bool)
    rows, cols = sk.shape
    padded = np.pad(sk, 1, mode="constant").astype(np.int8)
    ring = [padded[1 + dr : 1 + dr + rows, 1 + dc : 1 + dc + cols] for dr, dc in NEIGHBOUR_OFFSETS]
    transitions = sum(np.abs(ring[i] - ring[(i + 1) % 8]) for i in range(8))
    return np.where(sk, transitions // 2, 0).astype(np.int64)


def _skeleton_neighbours(sk: np.ndarray, r: int, c: int) -> List[Tuple[int, int]]:
    rows, cols = sk.shape
    found = []
    for dr, dc in NEIGHBOUR_OFFSETS:
        nr, nc = r + dr, c + dc
        if 0 <= nr < rows and 0 <= nc < cols and sk[nr, nc]:
            found.append((nr, nc))
    return found


def _trace(sk: np.ndarray, start: Tuple[int, int], visited: set, length: int) -> Tuple[int, int]:
    """Follow the skeleton from ``start`` for up to ``length`` pixels; stop at forks."""
    current = start
    visited = set(visited)
    visited.add(current)
    for _ in range(length - 1):
        candidates = [p for p in _skeleton_neighbours(sk, *current) if p not in visited]
        if len(candidates) != 1:
            break
        current = candidates[0]
        visited.add(current)
    return current


def _unit(origin: Tuple[int, int], target: Tuple[int, int]) -> np.ndarray:
    vector = np.array([target[1] - origin[1], origin[0] - target[0]], dtype=np.float64)
    norm = np.hypot(*vector)
    return vector / norm if norm > 0 else vector


def _branch_runs(sk: np.ndarray, r: int, c: int) -> List[Tuple[int, int]]:
    """First pixel of each cyclic run of set neighbours."""
    rows, cols = sk.shape
    flags = []
    for dr, dc in NEIGHBOUR_OFFSETS:
        nr, nc = r + dr, c + dc
        flags.append(0 <= nr < rows and 0 <= nc < cols and bool(sk[nr, nc]))
    starts = []
    for i in range(8):
        if flags[i] and not flags[i - 1]:
            dr, dc = NEIGHBOUR_OFFSETS[i]
            starts.append((r + dr, c + dc))
    return starts


def ridge_direction(sk: np.ndarray, r: int, c: int, kind: MinutiaKind, length: int) -> Optional[np.ndarray]:
    """Unit vector (x right, y up) the minutia points along, or None if undetermined.

    Terminations point from the end into the ridge. Bifurcations point against
    the bisector of the two branches with the smallest angle between them.
    """
    origin = (r, c)
    if kind is MinutiaKind.TERMINATION:
        neighbours = _skeleton_neighbours(sk, r, c)
        if not neighbours:
            return None
        blocked = {origin} | set(neighbours[1:])
        return _unit(origin, _trace(sk, neighbours[0], blocked, length))

    starts = _branch_runs(sk, r, c)
    blocked = {origin} | set(_skeleton_neighbours(sk, r, c))
    branches = [_unit(origin, _trace(sk, s, blocked - {s}, length)) for s in starts]
    if len(branches) < 2:
        return None
    best = None
    for a in range(len(branches)):
        for b in range(a + 1, len(branches)):
            cosine = float(np.dot(branches[a], branches[b]))
            if best is None or cosine > best[0]:
                best = (cosine, a, b)
    bisector = branches[best[1]] + branches[best[2]]
    if not np.any(bisector):
        return None
    return -bisector


def _oriented_theta(axis_radians: float, direction: Optional[np.ndarray]) -> float:
    axis = np.array([math.cos(axis_radians), math.sin(axis_radians)])
    degrees = math.degrees(axis_radians)
    if direction is not None and float(np.dot(axis, direction)) < 0:
        degrees += 180.0
    degrees = math.fmod(degrees, 360.0)
    if degrees < 0:
        degrees += 360.0
    return 0.0 if degrees >= 360.0 else degrees


def extract_minutiae(
    skeleton: np.ndarray,
    field: OrientationField,
    border_margin: int = DEFAULT_BORDER_MARGIN,
    coherence_threshold: float = DEFAULT_COHERENCE_THRESHOLD,
    merge_radius: float = DEFAULT_MERGE_RADIUS,
    trace_length: int = DIRECTION_TRACE_LENGTH,
) -> MinutiaeSet:
    """Terminations and bifurcations of ``skeleton`` sorted by (y, x).

    Candidates near the border or in incoherent blocks are dropped, then
    candidates closer than ``merge_radius`` are merged keeping the higher
    quality (ties: lower row, then lower column).
    """
    sk = np.asarray(skeleton, dtype=bool)
    if sk.ndim != 2 or tuple(sk.shape) != tuple(field.image_shape):
        raise ParameterError(f"skeleton shape {sk.shape} does not match orientation field {field.image_shape}")
    if border_margin < 0:
        raise ParameterError(f"border margin must be >= 0, got {border_margin}")
    rows, cols = sk.shape

    cn = crossing_number_map(sk)
    candidates = []
    for r, c in zip(*np.nonzero((cn == 1) | (cn == 3))):
        r, c = int(r), int(c)
        if min(r, c, rows - 1 - r, cols - 1 - c) < border_margin:
            continue
        quality = field.coherence_at(r, c)
        if quality < coherence_threshold:
            continue
        kind = _KIND_BY_CN[int(cn[r, c])]
        theta = _oriented_theta(field.angle_at(r, c), ridge_direction(sk, r, c, kind, trace_length))
        candidates.append(Minutia(x=c, y=r, theta=theta, kind=kind, quality=quality))

    kept: List[Minutia] = []
    for candidate in sorted(candidates, key=lambda m: (-m.quality, m.y, m.x)):
        if all(math.hypot(candidate.x - k.x, candidate.y - k.y) >= merge_radius for k in kept):
            kept.append(candidate)

    logger.debug(f"{len(candidates)} minutiae candidates, {len(kept)} kept after merging")
    return MinutiaeSet.from_unsorted((rows, cols), kept)


def minutiae_to_text(minutiae: MinutiaeSet) -> str:
    """``MINUTIAE v1 rows cols count`` followed by ``x y theta kind quality`` lines."""
    rows, cols = minutiae.source_dims
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION} {rows} {cols} {len(minutiae)}"]
    for m in minutiae:
        lines.append(f"{m.x} {m.y} {m.theta!r} {m.kind.value} {m.quality!r}")
    return "\n".join(lines) + "\n"


def minutiae_from_lines(lines: Sequence[str]) -> Tuple[MinutiaeSet, int]:
    """Parse a minutiae block from the start of ``lines``; returns the set and lines consumed."""
    if not lines:
        raise ParameterError("missing minutiae header")
    header = lines[0].split()
    if len(header) != 5 or header[0] != FORMAT_TAG or header[1] != FORMAT_VERSION:
        raise ParameterError(f"bad minutiae header: {lines[0]!r}")
    try:
        rows, cols, count = int(header[2]), int(header[3]), int(header[4])
    except ValueError as e:
        raise ParameterError(f"bad minutiae header: {lines[0]!r}") from e
    if len(lines) < 1 + count:
        raise ParameterError(f"minutiae block declares {count} entries, found {len(lines) - 1}")
    parsed = []
    for line in lines[1 : 1 + count]:
        parts = line.split()
        if len(parts) != 5:
            raise ParameterError(f"bad minutia line: {line!r}")
        try:
            parsed.append(
                Minutia(
                    x=int(parts[0]),
                    y=int(parts[1]),
                    theta=float(parts[2]),
                    kind=MinutiaKind(parts[3]),
                    quality=float(parts[4]),
                )
            )
        except ValueError as e:
            raise ParameterError(f"bad minutia line: {line!r}") from e
    return MinutiaeSet(source_dims=(rows, cols), minutiae=tuple(parsed)), 1 + count


def minutiae_from_text(text: str) -> MinutiaeSet:
    minutiae, _ = minutiae_from_lines(text.splitlines())
    return minutiae
