"""Run configuration: flat ``key = value`` files plus command-line overrides.

Precedence is defaults < config file < ``--set key=value`` < dedicated flags
(``--seed``). Every key maps to one :class:`RunConfig` field; unknown keys and
values that do not parse as the field's type are errors naming the key.
"""

from __future__ import annotations

import dataclasses
import logging
import typing
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .constants import RESOLVED_CONFIG_FILE
from .data import AugmentParams
from .exceptions import SplurgeSqcpcConfigError
from .fileio import read_lines, write_text
from .model import NetworkConfig
from .semisup import Stage, TrainConfig
from .synth import SynthSpec

logger = logging.getLogger(__name__)

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run, with desk-profile defaults."""

    seed: int = 0
    data_dir: str = "data"
    checkpoint: str = ""
    init: str = "scratch"
    resume: str = ""

    input_channels: int = 1
    input_height: int = 16
    input_width: int = 16
    extractor_widths: tuple[int, ...] = (8, 16, 32)
    extractor_strides: tuple[int, ...] = (2, 2, 2)
    num_intensities: int = 3
    temporal: bool = True

    synth_videos: int = 20
    synth_frames: int = 200
    synth_blob_sigma: float = 1.5
    synth_blob_positions: tuple[float, ...] = ()
    synth_smoothness: float = 3.0
    synth_walk_step: float = 0.6
    synth_drift: float = 0.05
    synth_noise: float = 0.01
    label_fraction: float = 0.02
    val_fraction: float = 0.2

    seq_len: int = 10
    context_len: int = 6
    frame_stride: int = 2
    window_hop: int = 4

    pretext_batch: int = 8
    pretext_lr: float = 1e-3
    pretext_betas: tuple[float, ...] = (0.9, 0.999)
    pretext_weight_decay: float = 1e-5
    pretext_epochs: int = 30

    finetune_batch: int = 4
    finetune_lr: float = 1e-3
    finetune_betas: tuple[float, ...] = (0.5, 0.999)
    finetune_weight_decay: float = 1e-5
    finetune_epochs: int = 30

    augment: bool = False
    aug_rotation: float = 20.0
    aug_scale: float = 0.1
    aug_flip: float = 0.5
    aug_jitter: float = 0.05
    aug_brightness: float = 0.1
    aug_contrast: float = 0.1
    aug_saturation: float = 0.1
    aug_hue: float = 0.1

    def network(self) -> NetworkConfig:
        return NetworkConfig(
            input_channels=self.input_channels,
            input_height=self.input_height,
            input_width=self.input_width,
            extractor_widths=self.extractor_widths,
            extractor_strides=self.extractor_strides,
            num_intensities=self.num_intensities,
            temporal=self.temporal,
        )

    def synth(self) -> SynthSpec:
        positions = self.synth_blob_positions
        if len(positions) % 2:
            raise SplurgeSqcpcConfigError(
                message="synth_blob_positions must list row,col pairs",
                error_code="invalid-value",
                details={"key": "synth_blob_positions"},
            )
        return SynthSpec(
            num_videos=self.synth_videos,
            num_frames=self.synth_frames,
            num_intensities=self.num_intensities,
            channels=self.input_channels,
            height=self.input_height,
            width=self.input_width,
            blob_sigma=self.synth_blob_sigma,
            blob_positions=tuple((positions[i], positions[i + 1]) for i in range(0, len(positions), 2)),
            smoothness=self.synth_smoothness,
            walk_step=self.synth_walk_step,
            drift=self.synth_drift,
            noise=self.synth_noise,
            seed=self.seed,
        )

    def augment_params(self) -> AugmentParams:
        return AugmentParams(
            rotation=self.aug_rotation,
            scale=self.aug_scale,
            flip=self.aug_flip,
            jitter=self.aug_jitter,
            brightness=self.aug_brightness,
            contrast=self.aug_contrast,
            saturation=self.aug_saturation,
            hue=self.aug_hue,
        )

    def train(self, stage: Stage) -> TrainConfig:
        prefix = "pretext" if stage == "pretext" else "finetune"
        betas = getattr(self, f"{prefix}_betas")
        if len(betas) != 2:
            raise SplurgeSqcpcConfigError(
                message=f"{prefix}_betas needs exactly two values, got {len(betas)}",
                error_code="invalid-value",
                details={"key": f"{prefix}_betas"},
            )
        return TrainConfig(
            stage=stage,
            seq_len=self.seq_len,
            context_len=self.context_len,
            batch_size=getattr(self, f"{prefix}_batch"),
            lr=getattr(self, f"{prefix}_lr"),
            betas=(float(betas[0]), float(betas[1])),
            weight_decay=getattr(self, f"{prefix}_weight_decay"),
            epochs=getattr(self, f"{prefix}_epochs"),
            seed=self.seed,
            init=self.init,
            frame_stride=self.frame_stride,
            window_hop=self.window_hop,
            augment=self.augment,
            augment_params=self.augment_params(),
        )


def _field_types() -> dict[str, Any]:
    hints = typing.get_type_hints(RunConfig)
    return {f.name: hints[f.name] for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str, kind: Any) -> Any:
    text = raw.strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is str:
            return text
        element = typing.get_args(kind)[0]
        return tuple(element(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise (
            SplurgeSqcpcConfigError(
                message=f"invalid value for {key}: {raw!r} ({e})",
                error_code="invalid-value",
                details={"key": key},
            ).add_suggestion("Lists are comma-separated, booleans true/false.")
        ) from e


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_assignments(lines: Iterable[str], source: str) -> dict[str, str]:
    """Collect ``key = value`` pairs, ignoring blank lines and ``#`` comments."""
    pairs: dict[str, str] = {}
    for number, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        if not sep or not key.strip():
            raise SplurgeSqcpcConfigError(
                message=f"{source}:{number}: expected 'key = value', got {line.strip()!r}",
                error_code="bad-syntax",
                details={"line": number},
            )
        pairs[key.strip()] = value.strip()
    return pairs


def apply_assignments(config: RunConfig, pairs: dict[str, str]) -> RunConfig:
    """Return ``config`` with the given keys replaced.

    Raises:
        SplurgeSqcpcConfigError: If a key is unknown or a value does not parse.
    """
    types = _field_types()
    unknown = sorted(set(pairs) - set(types))
    if unknown:
        raise (
            SplurgeSqcpcConfigError(
                message=f"unknown config key(s): {', '.join(unknown)}",
                error_code="unknown-key",
                details={"keys": unknown},
            ).add_suggestion("Check the keys against the resolved_config.txt of a previous run.")
        )
    changes = {key: _coerce(key, raw, types[key]) for key, raw in pairs.items()}
    return dataclasses.replace(config, **changes)


def load_config(path: str | Path | None = None, overrides: Sequence[str] = (), seed: int | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from defaults, an optional file, ``--set`` overrides and ``--seed``."""
    config = RunConfig()
    if path is not None:
        config = apply_assignments(config, parse_assignments(read_lines(path), str(path)))
        logger.debug(f"Loaded config file {path}")
    if overrides:
        config = apply_assignments(config, parse_assignments(overrides, "--set"))
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


def resolved_lines(config: RunConfig) -> list[str]:
    values = dataclasses.asdict(config)
    return [f"{key} = {_format(values[key])}" for key in sorted(values)]


def write_resolved(out_dir: str | Path, config: RunConfig) -> Path:
    return write_text(Path(out_dir) / RESOLVED_CONFIG_FILE, resolved_lines(config))
