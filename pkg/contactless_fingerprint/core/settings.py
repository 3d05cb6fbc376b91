"""Persisted system configuration.

Stored as a flat JSON object (see docs/formats.md). Precedence when the CLI
resolves a value: command-line flag > environment variable > config file >
``config.py`` default.
"""

import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..config import (
    DEFAULT_AMT_OFFSET,
    DEFAULT_AMT_WINDOW,
    DEFAULT_ANGLE_TOLERANCE,
    DEFAULT_ARCHITECTURE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_BORDER_MARGIN,
    DEFAULT_COHERENCE_THRESHOLD,
    DEFAULT_CONFIG_FILENAME,
    DEFAULT_DISTANCE_RATIO,
    DEFAULT_DISTANCE_TOLERANCE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MARGIN,
    DEFAULT_MAX_PAIR_DISTANCE,
    DEFAULT_MAX_WORKERS,
    DEFAULT_MERGE_RADIUS,
    DEFAULT_SEED,
    DEFAULT_STORAGE_DIR,
    DEFAULT_STORE_DIRNAME,
    DEFAULT_W_D,
    DEFAULT_W_M,
    ENV_CONFIG,
    ENV_HOME,
    ENV_MAX_WORKERS,
)
from ..errors import ParameterError
from ..network.loss import ContrastiveConfig
from ..network.optim import AdamConfig
from .models import FusionWeights, MatcherTolerances, ScoreCalibration, ThresholdParams
from .pipeline import MinutiaeSettings

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def home_dir() -> Path:
    """``$CFR_HOME`` or ``~/.contactless-fingerprint``."""
    return Path(os.environ.get(ENV_HOME) or Path.home() / DEFAULT_STORAGE_DIR)


def default_config_path() -> Path:
    """``$CFR_CONFIG`` or ``<home>/config.json``."""
    return Path(os.environ.get(ENV_CONFIG) or home_dir() / DEFAULT_CONFIG_FILENAME)


@dataclass
class SystemConfig:
    """Every stable parameter of the system, as persisted on disk."""

    w_d: float = DEFAULT_W_D
    w_m: float = DEFAULT_W_M
    min_d: Optional[float] = None
    max_d: Optional[float] = None
    min_m: Optional[float] = None
    max_m: Optional[float] = None
    amt_window: int = DEFAULT_AMT_WINDOW
    amt_offset: float = DEFAULT_AMT_OFFSET
    block_size: int = DEFAULT_BLOCK_SIZE
    coherence_threshold: float = DEFAULT_COHERENCE_THRESHOLD
    border_margin: int = DEFAULT_BORDER_MARGIN
    merge_radius: float = DEFAULT_MERGE_RADIUS
    max_pair_distance: float = DEFAULT_MAX_PAIR_DISTANCE
    distance_tolerance: float = DEFAULT_DISTANCE_TOLERANCE
    distance_ratio: float = DEFAULT_DISTANCE_RATIO
    angle_tolerance: float = DEFAULT_ANGLE_TOLERANCE
    architecture: str = DEFAULT_ARCHITECTURE
    checkpoint: Optional[str] = None
    operating_threshold: Optional[float] = None
    store_dir: Optional[str] = None
    seed: int = DEFAULT_SEED
    margin: float = DEFAULT_MARGIN
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    max_workers: int = DEFAULT_MAX_WORKERS

    def validate(self) -> None:
        self.weights()
        if any(v is not None for v in (self.min_d, self.max_d, self.min_m, self.max_m)):
            self.calibration()
        ThresholdParams(self.amt_window, self.amt_offset).validate_for(self.amt_window, self.amt_window)
        if self.max_workers < 1:
            raise ParameterError(f"max_workers must be >= 1, got {self.max_workers}")

    def weights(self) -> FusionWeights:
        return FusionWeights(w_d=self.w_d, w_m=self.w_m)

    def calibration(self) -> Optional[ScoreCalibration]:
        """Configured calibration, or None when no bound has been set yet."""
        bounds = (self.min_d, self.max_d, self.min_m, self.max_m)
        if all(v is None for v in bounds):
            return None
        if any(v is None for v in bounds):
            raise ParameterError("calibration needs all of min_d, max_d, min_m, max_m")
        return ScoreCalibration(*[float(v) for v in bounds])

    def set_calibration(self, calibration: ScoreCalibration) -> None:
        self.min_d, self.max_d = calibration.min_d, calibration.max_d
        self.min_m, self.max_m = calibration.min_m, calibration.max_m

    def tolerances(self) -> MatcherTolerances:
        return MatcherTolerances(
            max_distance=self.max_pair_distance,
            distance_tolerance=self.distance_tolerance,
            distance_ratio=self.distance_ratio,
            angle_tolerance=self.angle_tolerance,
        )

    def minutiae_settings(self) -> MinutiaeSettings:
        return MinutiaeSettings(
            threshold=ThresholdParams(window=self.amt_window, offset=self.amt_offset),
            block_size=self.block_size,
            border_margin=self.border_margin,
            coherence_threshold=self.coherence_threshold,
            merge_radius=self.merge_radius,
        )

    def contrastive(self) -> ContrastiveConfig:
        return ContrastiveConfig(margin=self.margin)

    def adam(self) -> AdamConfig:
        return AdamConfig(
            learning_rate=self.learning_rate, epochs=self.epochs, batch_size=self.batch_size, seed=self.seed
        )

    def resolved_store_dir(self) -> Path:
        return Path(self.store_dir) if self.store_dir else home_dir() / DEFAULT_STORE_DIRNAME

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParameterError(f"unknown configuration fields: {', '.join(unknown)}")
        config = cls(**data)
        config.validate()
        return config

    @classmethod
    def load(cls, path: Optional[PathLike] = None) -> "SystemConfig":
        """Read the config file; a missing file yields defaults. Applies env overrides."""
        path = Path(path) if path else default_config_path()
        if path.exists():
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ParameterError(f"config file {path} is not valid JSON: {e}") from e
            if not isinstance(data, dict):
                raise ParameterError(f"config file {path} must hold a JSON object")
            config = cls.from_dict(data)
            logger.debug(f"Loaded configuration from {path}")
        else:
            config = cls()
        if os.environ.get(ENV_MAX_WORKERS):
            try:
                config.max_workers = int(os.environ[ENV_MAX_WORKERS])
            except ValueError as e:
                raise ParameterError(f"{ENV_MAX_WORKERS} must be an integer") from e
        config.validate()
        return config

    def save(self, path: Optional[PathLike] = None) -> Path:
        """Write the config atomically, creating parent directories."""
        self.validate()
        path = Path(path) if path else default_config_path()
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=".config-", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
                handle.write("\n")
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
        logger.debug(f"Saved configuration to {path}")
        return path
