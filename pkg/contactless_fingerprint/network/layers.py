"""Network layers with hand-written forward and backward passes.

Layers are immutable descriptions. Parameters live in a separate name -> array
mapping, so one layer list serves both siamese branches and concurrent callers.
Activations use NHWC layout.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from ..config import BATCH_NORM_EPSILON
from ..errors import ShapeError
from .architecture import Shape

Params = Mapping[str, np.ndarray]
Grads = Dict[str, np.ndarray]


@dataclass(frozen=True)
class Layer(ABC):
    """Abstract base class for a layer.

    Attributes:
        name: Prefix of this layer's parameter names (``conv1`` -> ``conv1.weight``)
        input_shape: Per-sample input shape the layer accepts
    """

    name: str
    input_shape: Shape

    def check_input(self, x: np.ndarray) -> None:
        if tuple(x.shape[1:]) != tuple(self.input_shape):
            raise ShapeError(self.name, self.input_shape, x.shape[1:])

    @property
    @abstractmethod
    def output_shape(self) -> Shape:
        pass

    def parameter_shapes(self) -> Dict[str, Shape]:
        """Trainable parameter shapes, keyed by full parameter name."""
        return {}

    def buffer_shapes(self) -> Dict[str, Shape]:
        """Non-trainable state (running statistics)."""
        return {}

    @abstractmethod
    def forward(self, params: Params, x: np.ndarray, training: bool) -> Tuple[np.ndarray, Any]:
        pass

    @abstractmethod
    def backward(self, params: Params, cache: Any, dy: np.ndarray) -> Tuple[np.ndarray, Grads]:
        pass


@dataclass(frozen=True)
class Conv2D(Layer):
    """Stride-1 'same' convolution, computed as one tensordot per kernel offset."""

    filters: int = 1
    kernel_size: int = 3
    padding: int = 1

    @property
    def output_shape(self) -> Shape:
        rows, cols, _ = self.input_shape
        return (rows, cols, self.filters)

    def parameter_shapes(self) -> Dict[str, Shape]:
        k = self.kernel_size
        return {
            f"{self.name}.weight": (k, k, self.input_shape[2], self.filters),
            f"{self.name}.bias": (self.filters,),
        }

    def forward(self, params, x, training):
        self.check_input(x)
        weight = params[f"{self.name}.weight"]
        p = self.padding
        padded = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        n, rows, cols, _ = x.shape
        y = np.zeros((n, rows, cols, self.filters), dtype=x.dtype)
        for ky in range(self.kernel_size):
            for kx in range(self.kernel_size):
                y += padded[:, ky : ky + rows, kx : kx + cols, :] @ weight[ky, kx]
        y += params[f"{self.name}.bias"]
        return y, padded

    def backward(self, params, cache, dy):
        padded = cache
        weight = params[f"{self.name}.weight"]
        _, rows, cols, _ = dy.shape
        d_padded = np.zeros_like(padded)
        d_weight = np.zeros_like(weight)
        for ky in range(self.kernel_size):
            for kx in range(self.kernel_size):
                window = padded[:, ky : ky + rows, kx : kx + cols, :]
                d_weight[ky, kx] = np.tensordot(window, dy, axes=([0, 1, 2], [0, 1, 2]))
                d_padded[:, ky : ky + rows, kx : kx + cols, :] += dy @ weight[ky, kx].T
        p = self.padding
        dx = d_padded[:, p : p + rows, p : p + cols, :]
        return dx, {f"{self.name}.weight": d_weight, f"{self.name}.bias": dy.sum(axis=(0, 1, 2))}


@dataclass(frozen=True)
class BatchNorm(Layer):
    """Per-channel batch normalization.

    Training mode normalizes with the biased batch statistics and exposes them
    in the cache; inference mode uses the running statistics.
    """

    epsilon: float = BATCH_NORM_EPSILON

    @property
    def output_shape(self) -> Shape:
        return self.input_shape

    @property
    def channels(self) -> int:
        return self.input_shape[-1]

    def parameter_shapes(self) -> Dict[str, Shape]:
        return {f"{self.name}.gamma": (self.channels,), f"{self.name}.beta": (self.channels,)}

    def buffer_shapes(self) -> Dict[str, Shape]:
        return {f"{self.name}.running_mean": (self.channels,), f"{self.name}.running_var": (self.channels,)}

    def forward(self, params, x, training):
        self.check_input(x)
        axes = tuple(range(x.ndim - 1))
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
        else:
            mean = params[f"{self.name}.running_mean"]
            var = params[f"{self.name}.running_var"]
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        x_hat = (x - mean) * inv_std
        y = params[f"{self.name}.gamma"] * x_hat + params[f"{self.name}.beta"]
        return y.astype(x.dtype, copy=False), {"x_hat": x_hat, "inv_std": inv_std, "mean": mean, "var": var}

    def backward(self, params, cache, dy):
        axes = tuple(range(dy.ndim - 1))
        x_hat, inv_std = cache["x_hat"], cache["inv_std"]
        count = dy.size // dy.shape[-1]
        d_gamma = (dy * x_hat).sum(axis=axes)
        d_beta = dy.sum(axis=axes)
        d_x_hat = dy * params[f"{self.name}.gamma"]
        dx = (inv_std / count) * (
            count * d_x_hat - d_x_hat.sum(axis=axes) - x_hat * (d_x_hat * x_hat).sum(axis=axes)
        )
        return dx.astype(dy.dtype, copy=False), {f"{self.name}.gamma": d_gamma, f"{self.name}.beta": d_beta}


@dataclass(frozen=True)
class ReLU(Layer):
    @property
    def output_shape(self) -> Shape:
        return self.input_shape

    def forward(self, params, x, training):
        mask = x > 0
        return x * mask, mask

    def backward(self, params, cache, dy):
        return dy * cache, {}


@dataclass(frozen=True)
class AvgPool2D(Layer):
    """Non-overlapping average pooling; odd trailing rows/columns are dropped."""

    pool_size: int = 2

    @property
    def output_shape(self) -> Shape:
        rows, cols, channels = self.input_shape
        return (rows // self.pool_size, cols // self.pool_size, channels)

    def forward(self, params, x, training):
        self.check_input(x)
        k = self.pool_size
        n = x.shape[0]
        out_rows, out_cols, channels = self.output_shape
        cropped = x[:, : out_rows * k, : out_cols * k, :]
        y = cropped.reshape(n, out_rows, k, out_cols, k, channels).mean(axis=(2, 4))
        return y, x.shape

    def backward(self, params, cache, dy):
        k = self.pool_size
        dx = np.zeros(cache, dtype=dy.dtype)
        spread = np.repeat(np.repeat(dy, k, axis=1), k, axis=2) / (k * k)
        dx[:, : spread.shape[1], : spread.shape[2], :] = spread
        return dx, {}


@dataclass(frozen=True)
class Flatten(Layer):
    """Row-major (rows, cols, channels) flattening."""

    @property
    def output_shape(self) -> Shape:
        return (int(np.prod(self.input_shape)),)

    def forward(self, params, x, training):
        self.check_input(x)
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params, cache, dy):
        return dy.reshape(cache), {}


@dataclass(frozen=True)
class Dense(Layer):
    """Affine layer without activation."""

    units: int = 1

    @property
    def output_shape(self) -> Shape:
        return (self.units,)

    def parameter_shapes(self) -> Dict[str, Shape]:
        return {f"{self.name}.weight": (self.input_shape[0], self.units), f"{self.name}.bias": (self.units,)}

    def forward(self, params, x, training):
        self.check_input(x)
        return x @ params[f"{self.name}.weight"] + params[f"{self.name}.bias"], x

    def backward(self, params, cache, dy):
        x = cache
        grads = {f"{self.name}.weight": x.T @ dy, f"{self.name}.bias": dy.sum(axis=0)}
        return dy @ params[f"{self.name}.weight"].T, grads
