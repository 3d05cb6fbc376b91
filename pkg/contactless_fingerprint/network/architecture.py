"""Siamese branch architecture.

Three 3x3 convolution blocks (convolution, batch normalization, rectification)
followed by 2x2 average pooling, flattening and three dense layers. The
``full`` preset takes 310x240x3 photos and produces 16-element embeddings.
"""

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Tuple

from ..errors import ParameterError

Shape = Tuple[int, ...]


@dataclass(frozen=True)
class NetworkSpec:
    """Layer widths and input geometry of one siamese branch."""

    input_shape: Tuple[int, int, int] = (310, 240, 3)
    conv_filters: Tuple[int, ...] = (4, 8, 8)
    dense_units: Tuple[int, ...] = (256, 128, 16)
    kernel_size: int = 3
    padding: int = 1
    pool_size: int = 2

    def __post_init__(self):
        rows, cols, channels = self.input_shape
        if min(rows, cols, channels) < 1:
            raise ParameterError(f"invalid input shape {self.input_shape}")
        if not self.conv_filters or not self.dense_units:
            raise ParameterError("network needs at least one convolution and one dense layer")
        if self.kernel_size != 2 * self.padding + 1:
            raise ParameterError("only 'same' convolutions are supported (kernel = 2 * padding + 1)")
        if rows < self.pool_size or cols < self.pool_size:
            raise ParameterError(f"input {rows}x{cols} smaller than the pooling window")

    @classmethod
    def full(cls) -> "NetworkSpec":
        return cls()

    @classmethod
    def desk(cls) -> "NetworkSpec":
        """Same topology on 31x24 inputs."""
        return cls(input_shape=(31, 24, 3))

    @classmethod
    def tiny(cls) -> "NetworkSpec":
        """Gradient-check sized network."""
        return cls(input_shape=(8, 8, 3), conv_filters=(2, 2, 2), dense_units=(8, 4, 2))

    @classmethod
    def named(cls, name: str) -> "NetworkSpec":
        presets = {"full": cls.full, "desk": cls.desk, "tiny": cls.tiny}
        if name not in presets:
            raise ParameterError(f"unknown architecture '{name}', expected one of {sorted(presets)}")
        return presets[name]()

    @property
    def embedding_size(self) -> int:
        return self.dense_units[-1]

    def output_shapes(self) -> List[Shape]:
        """Activation shape after each block: convolutions, pooling, flatten, dense layers."""
        rows, cols, _ = self.input_shape
        shapes: List[Shape] = [(rows, cols, f) for f in self.conv_filters]
        pooled = (rows // self.pool_size, cols // self.pool_size, self.conv_filters[-1])
        shapes.append(pooled)
        shapes.append((pooled[0] * pooled[1] * pooled[2],))
        shapes.extend((units,) for units in self.dense_units)
        return shapes

    def to_dict(self) -> Dict[str, Any]:
        return {key: list(value) if isinstance(value, tuple) else value for key, value in asdict(self).items()}

    def spec_hash(self) -> bytes:
        """SHA-256 of the canonical JSON form; binds checkpoints to an architecture."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).digest()
