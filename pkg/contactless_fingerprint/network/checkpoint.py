"""Versioned binary checkpoint for NetworkParams.

Layout (little-endian):
    8 bytes   magic ``CFRNET\\x00\\x01``
    uint32    format version
    32 bytes  SHA-256 of the architecture (NetworkSpec.spec_hash)
    float32   every tensor in declaration order, running statistics included
"""

import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import CheckpointError
from .architecture import NetworkSpec
from .siamese import NetworkParams, build_layers, declared_shapes

logger = logging.getLogger(__name__)

MAGIC = b"CFRNET\x00\x01"
VERSION = 1
_HEADER = struct.Struct("<8sI32s")


def save_checkpoint(params: NetworkParams, path: Union[str, Path]) -> Path:
    """Write atomically (temporary file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [_HEADER.pack(MAGIC, VERSION, params.spec.spec_hash())]
    payload.extend(np.ascontiguousarray(value, dtype="<f4").tobytes() for value in params.tensors.values())
    fd, tmp_name = tempfile.mkstemp(prefix=".ckpt-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(b"".join(payload))
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info(f"Saved checkpoint with {len(params.tensors)} tensors to {path}")
    return path


def load_checkpoint(path: Union[str, Path], spec: NetworkSpec) -> NetworkParams:
    """Read a checkpoint written for ``spec``; raises CheckpointError on any mismatch."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if len(data) < _HEADER.size:
        raise CheckpointError(f"checkpoint {path} is truncated")
    magic, version, digest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path} is not a network checkpoint")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} in {path}")
    if digest != spec.spec_hash():
        raise CheckpointError(f"checkpoint {path} was written for a different architecture")

    shapes = declared_shapes(build_layers(spec))
    expected = _HEADER.size + 4 * sum(int(np.prod(shape)) for shape in shapes.values())
    if len(data) != expected:
        raise CheckpointError(f"checkpoint {path} has {len(data)} bytes, expected {expected}")

    tensors = {}
    offset = _HEADER.size
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        tensors[name] = np.frombuffer(data, dtype="<f4", count=count, offset=offset).astype(np.float32).reshape(shape)
        offset += 4 * count
    try:
        return NetworkParams(spec, tensors)
    except ValueError as e:
        raise CheckpointError(f"invalid tensors in {path}: {e}") from e
