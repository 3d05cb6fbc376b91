"""Shared-weight siamese branch: parameter container, forward and backward passes."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import cv2
import numpy as np

from ..errors import NonFiniteError, ParameterError, ShapeError
from .architecture import NetworkSpec, Shape
from .layers import AvgPool2D, BatchNorm, Conv2D, Dense, Flatten, Grads, Layer, ReLU

logger = logging.getLogger(__name__)

Tape = List[Tuple[Layer, object]]


def build_layers(spec: NetworkSpec) -> Tuple[Layer, ...]:
    """Layer sequence for ``spec`` in declaration order."""
    layers: List[Layer] = []
    shape: Shape = spec.input_shape
    for index, filters in enumerate(spec.conv_filters, start=1):
        conv = Conv2D(f"conv{index}", shape, filters=filters, kernel_size=spec.kernel_size, padding=spec.padding)
        norm = BatchNorm(f"bn{index}", conv.output_shape)
        relu = ReLU(f"relu{index}", norm.output_shape)
        layers.extend([conv, norm, relu])
        shape = relu.output_shape
    pool = AvgPool2D("pool", shape, pool_size=spec.pool_size)
    flatten = Flatten("flatten", pool.output_shape)
    layers.extend([pool, flatten])
    shape = flatten.output_shape
    for index, units in enumerate(spec.dense_units, start=1):
        dense = Dense(f"dense{index}", shape, units=units)
        layers.append(dense)
        shape = dense.output_shape
    return tuple(layers)


def block_outputs(layers: Sequence[Layer]) -> List[Layer]:
    """Layers whose outputs form the reported activation shapes."""
    return [layer for layer in layers if not isinstance(layer, (Conv2D, BatchNorm))]


@dataclass
class NetworkParams:
    """Parameters and running statistics of one siamese branch.

    ``tensors`` is ordered by declaration: for each layer, trainable parameters
    first, then its buffers.
    """

    spec: NetworkSpec
    tensors: Dict[str, np.ndarray]
    layers: Tuple[Layer, ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.layers = build_layers(self.spec)
        expected = declared_shapes(self.layers)
        if list(self.tensors) != list(expected):
            raise ParameterError("parameter names do not match the network declaration")
        for name, shape in expected.items():
            if tuple(self.tensors[name].shape) != tuple(shape):
                raise ShapeError(name, shape, self.tensors[name].shape)
        for layer in self.layers:
            if isinstance(layer, BatchNorm) and np.any(self.tensors[f"{layer.name}.running_var"] < 0):
                raise ParameterError(f"{layer.name} running variance must be non-negative")

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.tensors.values())).dtype

    def trainable_names(self) -> List[str]:
        return [name for layer in self.layers for name in layer.parameter_shapes()]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.spec, {name: value.copy() for name, value in self.tensors.items()})

    def astype(self, dtype) -> "NetworkParams":
        return NetworkParams(self.spec, {name: value.astype(dtype) for name, value in self.tensors.items()})


def declared_shapes(layers: Sequence[Layer]) -> Dict[str, Shape]:
    shapes: Dict[str, Shape] = {}
    for layer in layers:
        shapes.update(layer.parameter_shapes())
        shapes.update(layer.buffer_shapes())
    return shapes


def init_params(spec: NetworkSpec, seed: int = 0, dtype=np.float32) -> NetworkParams:
    """He-normal convolutions, LeCun-normal dense layers, zero biases, gamma 1, beta 0."""
    rng = np.random.default_rng(seed)
    tensors: Dict[str, np.ndarray] = {}
    for layer in build_layers(spec):
        for name, shape in layer.parameter_shapes().items():
            if name.endswith(".weight") and isinstance(layer, Conv2D):
                fan_in = shape[0] * shape[1] * shape[2]
                value = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
            elif name.endswith(".weight"):
                value = rng.normal(0.0, np.sqrt(1.0 / shape[0]), size=shape)
            elif name.endswith(".gamma"):
                value = np.ones(shape)
            else:
                value = np.zeros(shape)
            tensors[name] = value.astype(dtype)
        for name, shape in layer.buffer_shapes().items():
            tensors[name] = (np.ones(shape) if name.endswith("running_var") else np.zeros(shape)).astype(dtype)
    return NetworkParams(spec, tensors)


def prepare_images(images: Sequence[np.ndarray], spec: NetworkSpec, dtype=np.float32) -> np.ndarray:
    """Stack 8-bit photos into an NHWC batch scaled to [0, 1].

    Gray photos are channel-replicated. Photos of a different size are resized
    to the network input with area interpolation.
    """
    rows, cols, channels = spec.input_shape
    batch = np.empty((len(images), rows, cols, channels), dtype=dtype)
    for index, image in enumerate(images):
        arr = np.asarray(image)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], channels, axis=2)
        if arr.ndim != 3 or arr.shape[2] != channels:
            raise ShapeError("input", spec.input_shape, arr.shape)
        if arr.shape[:2] != (rows, cols):
            arr = cv2.resize(arr, (cols, rows), interpolation=cv2.INTER_AREA)
            if arr.ndim == 2:
                arr = arr[:, :, None]
        batch[index] = arr.astype(np.float64) / 255.0
    return batch


def forward(
    params: NetworkParams, x: np.ndarray, training: bool = False, check_finite: bool = False
) -> Tuple[np.ndarray, Tape]:
    """Embeddings for an NHWC batch, plus the tape needed by :func:`backward`."""
    tape: Tape = []
    out = np.asarray(x, dtype=params.dtype)
    for layer in params.layers:
        out, cache = layer.forward(params.tensors, out, training)
        if check_finite and not np.all(np.isfinite(out)):
            raise NonFiniteError(layer.name, "activation")
        tape.append((layer, cache))
    return out, tape


def backward(params: NetworkParams, tape: Tape, d_out: np.ndarray) -> Grads:
    """Gradients of every trainable parameter given the upstream gradient."""
    grads: Grads = {}
    grad = d_out
    for layer, cache in reversed(tape):
        grad, layer_grads = layer.backward(params.tensors, cache, grad)
        grads.update(layer_grads)
    return grads


def batch_statistics(tape: Tape) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """Batch mean and variance seen by each batch-norm layer in a training pass."""
    return {layer.name: (cache["mean"], cache["var"]) for layer, cache in tape if isinstance(layer, BatchNorm)}


def activation_shapes(params: NetworkParams, x: np.ndarray) -> List[Shape]:
    """Per-sample shapes after each block (instrumented inference pass)."""
    reported = {layer.name for layer in block_outputs(params.layers)}
    shapes = []
    out = np.asarray(x, dtype=params.dtype)
    for layer in params.layers:
        out, _ = layer.forward(params.tensors, out, False)
        if layer.name in reported:
            shapes.append(tuple(out.shape[1:]))
    return shapes


def embed(params: NetworkParams, image: np.ndarray) -> np.ndarray:
    """16-element (or ``spec.embedding_size``) embedding of one photo in inference mode."""
    batch = prepare_images([image], params.spec, dtype=params.dtype)
    out, _ = forward(params, batch, training=False)
    return out[0]


def embed_batch(params: NetworkParams, images: Sequence[np.ndarray], chunk: Optional[int] = 32) -> np.ndarray:
    chunks = []
    step = chunk or len(images)
    for start in range(0, len(images), step):
        batch = prepare_images(images[start : start + step], params.spec, dtype=params.dtype)
        chunks.append(forward(params, batch, training=False)[0])
    if not chunks:
        return np.zeros((0, params.spec.embedding_size), dtype=params.dtype)
    return np.concatenate(chunks, axis=0)
