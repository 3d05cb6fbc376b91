"""Dataset enumeration for the ``<root>/<finger_id>/<impression>.png`` layout.

Impression indices are zero-based and contiguous, and every finger must have
the same number of impressions. Hidden entries and files at the root (such as
the ``dataset.json`` sidecar) are ignored.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.imaging import read_rgb
from ..errors import IngestionError, ParameterError

logger = logging.getLogger(__name__)

IMPRESSION_PATTERN = re.compile(r"^(0|[1-9][0-9]*)\.png$")
SPLITS = ("train", "test", "all")


@dataclass
class FingerRecord:
    finger_id: str
    impressions: List[Path] = field(default_factory=list)


@dataclass
class DatasetIndex:
    """Fingers sorted by id, each with its impression paths in index order."""

    root: Path
    fingers: List[FingerRecord]

    @property
    def impressions_per_finger(self) -> int:
        return len(self.fingers[0].impressions) if self.fingers else 0

    @property
    def image_count(self) -> int:
        return sum(len(f.impressions) for f in self.fingers)

    def split(self, name: str) -> "DatasetIndex":
        """``train``: first ceil(F/2) fingers; ``test``: the rest; ``all``: every finger."""
        if name not in SPLITS:
            raise ParameterError(f"unknown split '{name}', expected one of {', '.join(SPLITS)}")
        if name == "all":
            return self
        cut = math.ceil(len(self.fingers) / 2)
        chosen = self.fingers[:cut] if name == "train" else self.fingers[cut:]
        return DatasetIndex(root=self.root, fingers=list(chosen))

    def samples(self) -> List[Tuple[int, int, Path]]:
        """(finger index, impression index, path) for every image."""
        return [(f, k, path) for f, finger in enumerate(self.fingers) for k, path in enumerate(finger.impressions)]

    def labels(self) -> List[str]:
        return [finger.finger_id for finger in self.fingers for _ in finger.impressions]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "root": str(self.root),
            "fingers": len(self.fingers),
            "impressions_per_finger": self.impressions_per_finger,
            "finger_ids": [f.finger_id for f in self.fingers],
        }


class DatasetEnumerator:
    """Enumerate and validate a fingerprint dataset directory.

    Configuration:
        root: Dataset root directory
        split: "train", "test" or "all" (default)
        min_fingers: Minimum number of fingers required (default 2)
    """

    def __init__(self, root: Path, split: str = "all", min_fingers: int = 2):
        self.root = Path(root)
        self.split = split
        self.min_fingers = min_fingers

    def validate_config(self) -> Optional[str]:
        """Validate configuration; returns an error message or None."""
        if not self.root.exists():
            return "Dataset directory does not exist"
        if not self.root.is_dir():
            return "Dataset path is not a directory"
        if self.split not in SPLITS:
            return f"Unknown split '{self.split}'"
        return None

    def enumerate(self) -> DatasetIndex:
        """Scan the dataset.

        Raises:
            IngestionError: layout violation, naming the offending path
        """
        error = self.validate_config()
        if error:
            raise IngestionError(error, self.root)

        fingers = []
        for finger_dir in sorted(p for p in self.root.iterdir() if p.is_dir() and not p.name.startswith(".")):
            indexed = {}
            for entry in finger_dir.iterdir():
                if entry.name.startswith("."):
                    continue
                match = IMPRESSION_PATTERN.match(entry.name)
                if not match or not entry.is_file():
                    raise IngestionError("unexpected entry in finger directory", entry)
                indexed[int(match.group(1))] = entry
            if sorted(indexed) != list(range(len(indexed))):
                raise IngestionError("impression indices must be contiguous from 0", finger_dir)
            fingers.append(FingerRecord(finger_id=finger_dir.name, impressions=[indexed[k] for k in sorted(indexed)]))

        if len(fingers) < self.min_fingers:
            raise IngestionError(f"dataset needs at least {self.min_fingers} finger directories", self.root)
        counts = {len(f.impressions) for f in fingers}
        if len(counts) != 1:
            uneven = next(f for f in fingers if len(f.impressions) != len(fingers[0].impressions))
            raise IngestionError("fingers have different impression counts", self.root / uneven.finger_id)
        if counts.pop() < 2:
            raise IngestionError("each finger needs at least 2 impressions", self.root)

        index = DatasetIndex(root=self.root.resolve(), fingers=fingers).split(self.split)
        logger.info(
            f"Dataset {self.root}: {len(index.fingers)} fingers x {index.impressions_per_finger} impressions "
            f"(split {self.split})"
        )
        return index


def load_images(paths: List[Path], pool=None) -> List[np.ndarray]:
    """Read photos as RGB arrays, in parallel when a ScoringPool is given."""
    if pool is None:
        return [read_rgb(path) for path in paths]
    return pool.map(read_rgb, paths, label="image read")
