"""Procedural fingerprint-like images with planted minutiae.

A finger is a phase field: parallel bands along a base ridge angle, bent by a
parabolic curvature term and a sinusoidal wobble. Each planted minutia adds a
spiral term ``±atan2(y - y0, x - x0)`` that starts or ends one ridge at
``(x0, y0)``. Impressions render the field under a rigid transform with
contrast jitter and smoothed additive noise.

Planted kinds are nominal. Positions are snapped along the phase gradient to a
fixed phase per kind, so both kinds appear but the extracted type may differ.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from ..config import (
    DEFAULT_CONTRAST_JITTER,
    DEFAULT_IMAGE_COLS,
    DEFAULT_IMAGE_ROWS,
    DEFAULT_MAX_ROTATION,
    DEFAULT_MAX_TRANSLATION,
    DEFAULT_NOISE_LEVEL,
    DEFAULT_PLANTED_MINUTIAE,
    DEFAULT_SEED,
    DEFAULT_SYNTH_IMPRESSIONS,
    DEFAULT_WAVELENGTH,
)
from ..core.imaging import write_rgb
from ..core.models import MinutiaKind
from ..errors import OverwriteRefusedError, ParameterError
from ..evaluation.scoring_pool import ScoringPool

logger = logging.getLogger(__name__)

MIN_WAVELENGTH = 4.0
PLANT_MARGIN = 50
PLANT_SPACING = 3.5  # in wavelengths
PLANT_ATTEMPTS = 2000
SNAP_ITERATIONS = 4
SHARPNESS = 2.5
MID_GRAY = 128.0
BAND_AMPLITUDE = 100.0
NOISE_SIGMA = 1.0
TINT = np.array([1.0, 0.95, 0.9])
SIDECAR_NAME = "dataset.json"
SIDECAR_FORMAT = "contactless-fingerprint-synthetic"
SIDECAR_VERSION = 1

_KIND_PHASE = {MinutiaKind.TERMINATION: 0.0, MinutiaKind.BIFURCATION: math.pi}


@dataclass(frozen=True)
class PlantedMinutia:
    x: float
    y: float
    kind: MinutiaKind
    sign: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {"x": self.x, "y": self.y, "kind": self.kind.value, "sign": self.sign}


@dataclass(frozen=True)
class Perturbation:
    """Rigid placement of one impression: rotation (degrees) about the image
    centre, then translation (pixels). ``noise_seed`` None renders noise-free."""

    rotation: float = 0.0
    dx: float = 0.0
    dy: float = 0.0
    contrast: float = 1.0
    noise_seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SyntheticFingerSpec:
    seed: int = DEFAULT_SEED
    image_shape: Tuple[int, int] = (DEFAULT_IMAGE_ROWS, DEFAULT_IMAGE_COLS)
    wavelength: float = DEFAULT_WAVELENGTH
    ridge_angle: float = 0.0
    curvature: float = 0.0
    wobble_amplitude: float = 0.0
    wobble_period: float = 100.0
    wobble_phase: float = 0.0
    phase_offset: float = 0.0
    minutiae: Tuple[PlantedMinutia, ...] = ()
    max_rotation: float = DEFAULT_MAX_ROTATION
    max_translation: float = DEFAULT_MAX_TRANSLATION
    contrast_jitter: float = DEFAULT_CONTRAST_JITTER
    noise_level: float = DEFAULT_NOISE_LEVEL

    def __post_init__(self):
        rows, cols = self.image_shape
        if rows < 1 or cols < 1:
            raise ParameterError(f"image shape must be positive, got {self.image_shape}")
        if self.wavelength < MIN_WAVELENGTH:
            raise ParameterError(f"ridge wavelength must be >= {MIN_WAVELENGTH}, got {self.wavelength}")
        if self.wobble_period <= 0:
            raise ParameterError(f"wobble period must be positive, got {self.wobble_period}")
        if self.max_rotation < 0 or self.max_translation < 0:
            raise ParameterError("perturbation bounds must be non-negative")
        if not 0 <= self.contrast_jitter < 1:
            raise ParameterError(f"contrast jitter must be in [0, 1), got {self.contrast_jitter}")
        if self.noise_level < 0:
            raise ParameterError(f"noise level must be non-negative, got {self.noise_level}")
        for planted in self.minutiae:
            if not (0 <= planted.x <= cols - 1 and 0 <= planted.y <= rows - 1):
                raise ParameterError(f"planted minutia ({planted.x:.1f}, {planted.y:.1f}) outside the frame")

    @property
    def centre(self) -> Tuple[float, float]:
        rows, cols = self.image_shape
        return (cols - 1) / 2.0, (rows - 1) / 2.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["image_shape"] = list(self.image_shape)
        data["minutiae"] = [m.to_dict() for m in self.minutiae]
        return data


def base_phase(spec: SyntheticFingerSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Phase of the ridge bands without planted minutiae, in radians.

    At zero curvature and wobble this is the grating whose ridges run at
    ``ridge_angle`` degrees counter-clockwise from +x (rows growing down).
    """
    cx, cy = spec.centre
    angle = math.radians(spec.ridge_angle)
    dx, dy = np.asarray(x, float) - cx, np.asarray(y, float) - cy
    across = dx * math.sin(angle) + dy * math.cos(angle)
    along = dx * math.cos(angle) - dy * math.sin(angle)
    offset = (
        across
        + 0.5 * spec.curvature * along**2
        + spec.wobble_amplitude * np.sin(2 * math.pi * along / spec.wobble_period + spec.wobble_phase)
    )
    return 2 * math.pi * offset / spec.wavelength + spec.phase_offset


def phase(
    spec: SyntheticFingerSpec, x: np.ndarray, y: np.ndarray, minutiae: Optional[Tuple[PlantedMinutia, ...]] = None
) -> np.ndarray:
    planted = spec.minutiae if minutiae is None else minutiae
    value = base_phase(spec, x, y)
    for m in planted:
        value = value + m.sign * np.arctan2(np.asarray(y, float) - m.y, np.asarray(x, float) - m.x)
    return value


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def _snap(spec: SyntheticFingerSpec, plants: List[PlantedMinutia], index: int) -> PlantedMinutia:
    """Move plant ``index`` along the phase gradient until the phase of the
    other terms reaches the target phase of its kind."""
    target = plants[index]
    others = tuple(p for k, p in enumerate(plants) if k != index)
    x, y = target.x, target.y
    h = 0.5
    for _ in range(SNAP_ITERATIONS):
        here = float(phase(spec, x, y, others))
        gx = _wrap(float(phase(spec, x + h, y, others)) - float(phase(spec, x - h, y, others))) / (2 * h)
        gy = _wrap(float(phase(spec, x, y + h, others)) - float(phase(spec, x, y - h, others))) / (2 * h)
        norm = gx * gx + gy * gy
        if norm == 0:
            break
        residual = _wrap(_KIND_PHASE[target.kind] - here)
        x, y = x + residual * gx / norm, y + residual * gy / norm
    rows, cols = spec.image_shape
    x = min(max(x, 0.0), cols - 1.0)
    y = min(max(y, 0.0), rows - 1.0)
    return PlantedMinutia(x=x, y=y, kind=target.kind, sign=target.sign)


def plant_minutiae(
    spec: SyntheticFingerSpec, count: int, rng: np.random.Generator, margin: int = PLANT_MARGIN
) -> Tuple[PlantedMinutia, ...]:
    """Draw ``count`` well-separated minutiae and snap them to their kind's phase."""
    if count == 0:
        return ()
    rows, cols = spec.image_shape
    if cols - 1 - 2 * margin <= 0 or rows - 1 - 2 * margin <= 0:
        raise ParameterError(f"image {rows}x{cols} too small to plant minutiae with margin {margin}")
    spacing = PLANT_SPACING * spec.wavelength
    points: List[Tuple[float, float]] = []
    for _ in range(PLANT_ATTEMPTS):
        candidate = (rng.uniform(margin, cols - 1 - margin), rng.uniform(margin, rows - 1 - margin))
        if all(math.hypot(candidate[0] - px, candidate[1] - py) >= spacing for px, py in points):
            points.append(candidate)
            if len(points) == count:
                break
    else:
        raise ParameterError(f"cannot place {count} minutiae at least {spacing:g} px apart in {rows}x{cols}")

    kinds = rng.choice([MinutiaKind.TERMINATION, MinutiaKind.BIFURCATION], size=count)
    plants = [
        PlantedMinutia(x=float(px), y=float(py), kind=MinutiaKind(kind), sign=1 if k % 2 == 0 else -1)
        for k, ((px, py), kind) in enumerate(zip(points, kinds))
    ]
    for _ in range(2):
        for index in range(count):
            plants[index] = _snap(spec, plants, index)
    return tuple(plants)


def random_finger_spec(
    seed: int,
    image_shape: Tuple[int, int] = (DEFAULT_IMAGE_ROWS, DEFAULT_IMAGE_COLS),
    wavelength: float = DEFAULT_WAVELENGTH,
    planted: int = DEFAULT_PLANTED_MINUTIAE,
    noise_level: float = DEFAULT_NOISE_LEVEL,
) -> SyntheticFingerSpec:
    """Seeded random finger: base angle, bending and a planted minutiae plan."""
    rng = np.random.default_rng(seed)
    bare = SyntheticFingerSpec(
        seed=seed,
        image_shape=tuple(image_shape),
        wavelength=wavelength,
        ridge_angle=float(rng.uniform(0.0, 180.0)),
        curvature=float(rng.uniform(-1.0, 1.0) / 300.0),
        wobble_amplitude=float(rng.uniform(0.0, 1.5 * wavelength)),
        wobble_period=float(rng.uniform(120.0, 260.0)),
        wobble_phase=float(rng.uniform(0.0, 2 * math.pi)),
        phase_offset=float(rng.uniform(0.0, 2 * math.pi)),
        noise_level=noise_level,
    )
    plants = plant_minutiae(bare, planted, rng)
    return replace(bare, minutiae=plants)


def draw_perturbations(spec: SyntheticFingerSpec, count: int) -> List[Perturbation]:
    """Independent seeded placements for impressions 0..count-1."""
    perturbations = []
    for index in range(count):
        rng = np.random.default_rng([spec.seed, index])
        perturbations.append(
            Perturbation(
                rotation=float(rng.uniform(-spec.max_rotation, spec.max_rotation)),
                dx=float(rng.uniform(-spec.max_translation, spec.max_translation)),
                dy=float(rng.uniform(-spec.max_translation, spec.max_translation)),
                contrast=float(1.0 + rng.uniform(-spec.contrast_jitter, spec.contrast_jitter)),
                noise_seed=int(rng.integers(0, 2**32)),
            )
        )
    return perturbations


def planted_positions(spec: SyntheticFingerSpec, perturbation: Perturbation = Perturbation()) -> np.ndarray:
    """Image coordinates (x, y) of the planted minutiae in one impression."""
    if not spec.minutiae:
        return np.zeros((0, 2))
    cx, cy = spec.centre
    angle = math.radians(perturbation.rotation)
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    points = np.array([[m.x - cx, m.y - cy] for m in spec.minutiae])
    x = cx + cos_a * points[:, 0] - sin_a * points[:, 1] + perturbation.dx
    y = cy + sin_a * points[:, 0] + cos_a * points[:, 1] + perturbation.dy
    return np.column_stack([x, y])


def render_impression(spec: SyntheticFingerSpec, perturbation: Perturbation = Perturbation()) -> np.ndarray:
    """RGB uint8 impression; ridges are dark."""
    rows, cols = spec.image_shape
    cx, cy = spec.centre
    yy, xx = np.mgrid[0:rows, 0:cols].astype(np.float64)
    angle = math.radians(perturbation.rotation)
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    dx, dy = xx - cx - perturbation.dx, yy - cy - perturbation.dy
    finger_x = cx + cos_a * dx + sin_a * dy
    finger_y = cy - sin_a * dx + cos_a * dy

    bands = np.tanh(SHARPNESS * np.cos(phase(spec, finger_x, finger_y))) / math.tanh(SHARPNESS)
    intensity = MID_GRAY + BAND_AMPLITUDE * perturbation.contrast * bands
    if perturbation.noise_seed is not None and spec.noise_level > 0:
        rng = np.random.default_rng(perturbation.noise_seed)
        noise = gaussian_filter(rng.standard_normal((rows, cols)), sigma=NOISE_SIGMA)
        spread = noise.std()
        if spread > 0:
            intensity = intensity + 255.0 * spec.noise_level * noise / spread
    rgb = intensity[:, :, None] * TINT[None, None, :]
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def generate_finger(spec: SyntheticFingerSpec, impressions: int = DEFAULT_SYNTH_IMPRESSIONS) -> List[np.ndarray]:
    if impressions < 1:
        raise ParameterError(f"impressions must be >= 1, got {impressions}")
    return [render_impression(spec, p) for p in draw_perturbations(spec, impressions)]


@dataclass
class SyntheticDataset:
    root: Path
    specs: List[SyntheticFingerSpec] = field(default_factory=list)
    impressions: int = 0
    seed: int = DEFAULT_SEED

    @property
    def image_count(self) -> int:
        return len(self.specs) * self.impressions

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": SIDECAR_FORMAT,
            "version": SIDECAR_VERSION,
            "seed": self.seed,
            "fingers": len(self.specs),
            "impressions": self.impressions,
            "finger_specs": [
                {
                    "finger_id": finger_dir_name(index, len(self.specs)),
                    "spec": spec.to_dict(),
                    "perturbations": [p.to_dict() for p in draw_perturbations(spec, self.impressions)],
                }
                for index, spec in enumerate(self.specs)
            ],
        }


def finger_dir_name(index: int, fingers: int) -> str:
    return str(index).zfill(max(3, len(str(fingers - 1))))


def finger_seeds(seed: int, fingers: int) -> List[int]:
    """Independent per-finger seeds spawned from one dataset seed."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(fingers)]


def generate_dataset(
    out_dir: Path,
    fingers: int,
    impressions: int,
    seed: int = DEFAULT_SEED,
    image_shape: Tuple[int, int] = (DEFAULT_IMAGE_ROWS, DEFAULT_IMAGE_COLS),
    wavelength: float = DEFAULT_WAVELENGTH,
    planted: int = DEFAULT_PLANTED_MINUTIAE,
    max_workers: int = 1,
) -> SyntheticDataset:
    """Write ``<out_dir>/<finger>/<k>.png`` plus a ``dataset.json`` sidecar.

    Raises:
        ParameterError: fewer than 2 fingers or impressions
        OverwriteRefusedError: ``out_dir`` exists and is not empty
    """
    if fingers < 2 or impressions < 2:
        raise ParameterError(f"need at least 2 fingers and 2 impressions, got {fingers}x{impressions}")
    out_dir = Path(out_dir)
    if out_dir.exists() and (not out_dir.is_dir() or any(out_dir.iterdir())):
        raise OverwriteRefusedError(f"refusing to overwrite non-empty directory: {out_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    specs = [
        random_finger_spec(s, image_shape=image_shape, wavelength=wavelength, planted=planted)
        for s in finger_seeds(seed, fingers)
    ]
    dataset = SyntheticDataset(root=out_dir, specs=specs, impressions=impressions, seed=seed)

    def write_finger(index: int) -> Path:
        finger_dir = out_dir / finger_dir_name(index, fingers)
        finger_dir.mkdir()
        for k, image in enumerate(generate_finger(specs[index], impressions)):
            write_rgb(finger_dir / f"{k}.png", image)
        return finger_dir

    ScoringPool(max_workers=max_workers).map(write_finger, list(range(fingers)), label="finger")
    sidecar = json.dumps(dataset.to_dict(), indent=2, sort_keys=True)
    (out_dir / SIDECAR_NAME).write_text(sidecar + "\n", encoding="utf-8")
    logger.info(f"Generated {dataset.image_count} images ({fingers} fingers x {impressions}) in {out_dir}")
    return dataset
