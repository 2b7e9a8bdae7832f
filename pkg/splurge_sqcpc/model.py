"""Spatio-temporal network: feature extractor, ConvGRU, predictive head and regressor.

The network is kept as plain parameter arrays inside a :class:`ModelBundle`;
forward passes are functions of (inputs, parameter tensors, norm-layer state)
built from :mod:`splurge_sqcpc.diffcore` operations. Parameter names carry
their group as a prefix:

- ``extractor.*`` (θf): strided 3x3 conv blocks with per-channel norm and relu
- ``gru.*`` (θg): 1x1-conv update, reset and candidate gates
- ``predictor.*`` (θp): conv1x1 -> relu -> conv1x1 used by the pretext rollout
- ``head.*`` (θc): global average pool -> batch norm -> affine regressor

DOMAINS: ['model', 'convgru', 'regression']
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import read_checkpoint, write_checkpoint
from .diffcore import (
    AdamState,
    BatchNormState,
    NormMode,
    Tensor,
    activation,
    affine,
    batch_norm,
    concat,
    conv2d,
    global_avg_pool,
    reshape,
)
from .exceptions import SplurgeSqcpcConfigError, SplurgeSqcpcShapeError

logger = logging.getLogger(__name__)

PARAM_GROUPS = ("extractor", "gru", "predictor", "head")
KERNEL_SIZE = 3


@dataclass(frozen=True)
class NetworkConfig:
    """Sizes of every part of the network.

    The GRU latent width always equals the extractor's final width, so the
    hidden state has exactly the feature grid's shape.
    """

    input_channels: int = 1
    input_height: int = 16
    input_width: int = 16
    extractor_widths: tuple[int, ...] = (8, 16, 32)
    extractor_strides: tuple[int, ...] = (2, 2, 2)
    num_intensities: int = 3
    temporal: bool = True

    def __post_init__(self) -> None:
        if len(self.extractor_widths) != len(self.extractor_strides) or not self.extractor_widths:
            raise SplurgeSqcpcConfigError(
                message="extractor_widths and extractor_strides must be non-empty and of equal length",
                error_code="invalid-network",
            )
        sizes = (self.input_channels, self.input_height, self.input_width, self.num_intensities)
        if min(sizes) < 1 or min(self.extractor_widths) < 1 or min(self.extractor_strides) < 1:
            raise SplurgeSqcpcConfigError(
                message="network sizes and strides must be positive",
                error_code="invalid-network",
            )

    @classmethod
    def desk(cls, num_intensities: int = 3) -> NetworkConfig:
        return cls(num_intensities=num_intensities)

    @classmethod
    def published(cls, num_intensities: int = 12) -> NetworkConfig:
        """ResNet-18-shaped sizing: 3x128x128 input down to a 256x8x8 grid."""
        return cls(
            input_channels=3,
            input_height=128,
            input_width=128,
            extractor_widths=(64, 64, 128, 256, 256),
            extractor_strides=(2, 2, 1, 2, 2),
            num_intensities=num_intensities,
        )

    @property
    def feature_channels(self) -> int:
        return self.extractor_widths[-1]

    @property
    def grid_size(self) -> tuple[int, int]:
        height, width = self.input_height, self.input_width
        pad = KERNEL_SIZE // 2
        for stride in self.extractor_strides:
            height = (height + 2 * pad - KERNEL_SIZE) // stride + 1
            width = (width + 2 * pad - KERNEL_SIZE) // stride + 1
        return height, width

    @property
    def feature_shape(self) -> tuple[int, int, int]:
        return (self.feature_channels, *self.grid_size)

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        return (self.input_channels, self.input_height, self.input_width)


def _parameter_shapes(config: NetworkConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    c_prev = config.input_channels
    for index, width in enumerate(config.extractor_widths):
        shapes[f"extractor.{index}.weight"] = (width, c_prev, KERNEL_SIZE, KERNEL_SIZE)
        shapes[f"extractor.{index}.bias"] = (width,)
        shapes[f"extractor.{index}.norm.gamma"] = (width,)
        shapes[f"extractor.{index}.norm.beta"] = (width,)
        c_prev = width
    cf = config.feature_channels
    for gate in ("z", "r", "h"):
        shapes[f"gru.{gate}.weight"] = (cf, 2 * cf, 1, 1)
        shapes[f"gru.{gate}.bias"] = (cf,)
    for index in range(2):
        shapes[f"predictor.{index}.weight"] = (cf, cf, 1, 1)
        shapes[f"predictor.{index}.bias"] = (cf,)
    shapes["head.bn.gamma"] = (cf,)
    shapes["head.bn.beta"] = (cf,)
    shapes["head.fc.weight"] = (config.num_intensities, cf)
    shapes["head.fc.bias"] = (config.num_intensities,)
    return shapes


def _buffer_shapes(config: NetworkConfig) -> dict[str, tuple[int, ...]]:
    cf = config.feature_channels
    return {"head.bn.running_mean": (cf,), "head.bn.running_var": (cf,)}


def _initial_value(name: str, shape: tuple[int, ...], rng: np.random.Generator, dtype: np.dtype) -> np.ndarray:
    if name.endswith(".weight"):
        fan_in = int(np.prod(shape[1:]))
        return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
    if name.endswith(".gamma"):
        return np.ones(shape, dtype=dtype)
    return np.zeros(shape, dtype=dtype)


@dataclass
class ModelBundle:
    """Parameters (θf, θg, θp, θc) and norm-layer buffers of one network."""

    config: NetworkConfig
    params: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def initialize(
        cls,
        config: NetworkConfig,
        seed: int | np.random.Generator = 0,
        dtype: np.dtype | type = np.float32,
    ) -> ModelBundle:
        """Kaiming fan-in normal weights, zero biases, unit norm scales."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        dt = np.dtype(dtype)
        params = {name: _initial_value(name, shape, rng, dt) for name, shape in _parameter_shapes(config).items()}
        state = BatchNormState.initial(config.feature_channels, dt)
        buffers = {"head.bn.running_mean": state.running_mean, "head.bn.running_var": state.running_var}
        return cls(config=config, params=params, buffers=buffers)

    def group(self, prefix: str) -> dict[str, np.ndarray]:
        return {name: value for name, value in self.params.items() if name.startswith(prefix + ".")}

    @property
    def theta_f(self) -> dict[str, np.ndarray]:
        return self.group("extractor")

    @property
    def theta_g(self) -> dict[str, np.ndarray]:
        return self.group("gru")

    @property
    def theta_p(self) -> dict[str, np.ndarray]:
        return self.group("predictor")

    @property
    def theta_c(self) -> dict[str, np.ndarray]:
        return self.group("head")

    def parameter_count(self) -> int:
        return int(sum(value.size for value in self.params.values()))

    def tensors(self, requires_grad: bool = False) -> dict[str, Tensor]:
        return {name: Tensor(value, requires_grad=requires_grad) for name, value in self.params.items()}

    @property
    def head_state(self) -> BatchNormState:
        return BatchNormState(self.buffers["head.bn.running_mean"], self.buffers["head.bn.running_var"])

    def set_head_state(self, state: BatchNormState) -> None:
        self.buffers["head.bn.running_mean"] = state.running_mean
        self.buffers["head.bn.running_var"] = state.running_var

    def copy(self) -> ModelBundle:
        return ModelBundle(
            config=self.config,
            params={name: value.copy() for name, value in self.params.items()},
            buffers={name: value.copy() for name, value in self.buffers.items()},
        )

    def save(self, path: str | Path, adam: AdamState | None = None, epoch: int = 0) -> Path:
        """Write parameters, buffers and (optionally) optimizer state as an SQCK file."""
        tensors: dict[str, np.ndarray] = {}
        tensors.update({f"param/{name}": value for name, value in self.params.items()})
        tensors.update({f"buffer/{name}": value for name, value in self.buffers.items()})
        if adam is not None:
            tensors.update({f"adam/m/{name}": value for name, value in adam.m.items()})
            tensors.update({f"adam/v/{name}": value for name, value in adam.v.items()})
            tensors["adam/step"] = np.array([adam.step], dtype=np.int64)
        tensors["meta/epoch"] = np.array([epoch], dtype=np.int64)
        return write_checkpoint(path, tensors)

    @classmethod
    def load(cls, path: str | Path, config: NetworkConfig) -> tuple[ModelBundle, AdamState | None, int]:
        """Read a checkpoint written by :meth:`save` for the given network sizes.

        Raises:
            SplurgeSqcpcConfigError: If a stored tensor's shape differs from the config.
        """
        stored = read_checkpoint(path)
        bundle = cls.initialize(config)
        bundle.load_groups(stored, PARAM_GROUPS, include_buffers=True, path=path)
        adam: AdamState | None = None
        if "adam/step" in stored:
            adam = AdamState(
                m={name: stored[f"adam/m/{name}"] for name in bundle.params if f"adam/m/{name}" in stored},
                v={name: stored[f"adam/v/{name}"] for name in bundle.params if f"adam/v/{name}" in stored},
                step=int(stored["adam/step"][0]),
            )
        epoch = int(stored["meta/epoch"][0]) if "meta/epoch" in stored else 0
        return bundle, adam, epoch

    def load_groups(
        self,
        stored: Mapping[str, np.ndarray],
        groups: tuple[str, ...],
        include_buffers: bool = False,
        path: str | Path = "<memory>",
    ) -> None:
        """Overwrite the named parameter groups with checkpoint tensors of matching shape."""
        expected = {f"param/{name}": value for name, value in self.params.items()}
        if include_buffers:
            expected.update({f"buffer/{name}": value for name, value in self.buffers.items()})
        for key, current in expected.items():
            name = key.split("/", 1)[1]
            if name.split(".", 1)[0] not in groups:
                continue
            if key not in stored:
                raise SplurgeSqcpcConfigError(
                    message=f"checkpoint {path} has no tensor {key}",
                    error_code="checkpoint-missing-tensor",
                    details={"tensor": key},
                )
            value = stored[key]
            if value.shape != current.shape:
                raise (
                    SplurgeSqcpcConfigError(
                        message=f"checkpoint tensor {key} has shape {value.shape}, network expects {current.shape}",
                        error_code="checkpoint-shape-mismatch",
                        details={"tensor": key},
                    ).add_suggestion("Use the same network keys that produced the checkpoint.")
                )
            target = self.params if key.startswith("param/") else self.buffers
            target[name] = value.astype(current.dtype, copy=True)


@dataclass(frozen=True)
class GruState:
    """Hidden state h_t of shape [B, Cf, Hf, Wf]."""

    hidden: Tensor

    @classmethod
    def zeros(cls, batch: int, config: NetworkConfig, dtype: np.dtype | type = np.float32) -> GruState:
        return cls(Tensor(np.zeros((batch, *config.feature_shape), dtype=dtype)))


def _channel_view(t: Tensor) -> Tensor:
    return reshape(t, (1, t.shape[0], 1, 1))


def feature_extract(frames: Tensor, theta: Mapping[str, Tensor], config: NetworkConfig) -> Tensor:
    """Map frames [B, C, H, W] to feature grids [B, Cf, Hf, Wf] (no global pooling).

    Raises:
        SplurgeSqcpcShapeError: If the frames do not match the configured input size.
    """
    if frames.ndim != 4 or frames.shape[1:] != config.frame_shape:
        raise SplurgeSqcpcShapeError(
            message=f"feature_extract expects [B, {', '.join(map(str, config.frame_shape))}], got {frames.shape}",
            error_code="input-mismatch",
        )
    x = frames
    for index, stride in enumerate(config.extractor_strides):
        x = conv2d(
            x, theta[f"extractor.{index}.weight"], theta[f"extractor.{index}.bias"], stride, KERNEL_SIZE // 2
        )
        x = x * _channel_view(theta[f"extractor.{index}.norm.gamma"]) + _channel_view(
            theta[f"extractor.{index}.norm.beta"]
        )
        x = activation(x, "relu")
    return x


def conv_gru_step(x: Tensor, h_prev: GruState, theta: Mapping[str, Tensor]) -> GruState:
    """One ConvGRU update with 1x1 gates.

    z = sigmoid(Wz*[x;h]), r = sigmoid(Wr*[x;h]), h~ = tanh(Wh*[x; r*h]),
    h' = (1 - z)*h + z*h~.
    """
    h = h_prev.hidden
    if x.shape != h.shape:
        raise SplurgeSqcpcShapeError(
            message=f"conv_gru_step: input {x.shape} and hidden {h.shape} differ",
            error_code="dimension-mismatch",
        )
    xh = concat([x, h], axis=1)
    z = activation(conv2d(xh, theta["gru.z.weight"], theta["gru.z.bias"]), "sigmoid")
    r = activation(conv2d(xh, theta["gru.r.weight"], theta["gru.r.bias"]), "sigmoid")
    candidate = activation(conv2d(concat([x, r * h], axis=1), theta["gru.h.weight"], theta["gru.h.bias"]), "tanh")
    return GruState((1.0 - z) * h + z * candidate)


def predictive_step(h: GruState | Tensor, theta: Mapping[str, Tensor]) -> Tensor:
    """Predict the next feature grid from a hidden state: conv1x1 -> relu -> conv1x1."""
    hidden = h.hidden if isinstance(h, GruState) else h
    mid = activation(conv2d(hidden, theta["predictor.0.weight"], theta["predictor.0.bias"]), "relu")
    return conv2d(mid, theta["predictor.1.weight"], theta["predictor.1.bias"])


def regress_head(
    h: GruState | Tensor,
    theta: Mapping[str, Tensor],
    state: BatchNormState,
    mode: NormMode,
) -> tuple[Tensor, BatchNormState]:
    """Per-frame intensities [B, N]: global average pool -> batch norm -> affine.

    A train-mode batch of one sample is normalized with the running statistics
    (and leaves them unchanged) since batch statistics are undefined for it.
    """
    grid = h.hidden if isinstance(h, GruState) else h
    pooled = global_avg_pool(grid)
    if mode == "train" and pooled.shape[0] < 2:
        logger.debug("regress_head: batch of 1 in train mode, normalizing with running statistics")
        mode = "eval"
    normed, new_state = batch_norm(pooled, theta["head.bn.gamma"], theta["head.bn.beta"], state, mode)
    return affine(normed, theta["head.fc.weight"], theta["head.fc.bias"]), new_state
