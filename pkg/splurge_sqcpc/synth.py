"""Synthetic blob videos with known per-frame intensities.

Each intensity channel n owns a Gaussian blob at a fixed position; its
brightness follows a clipped, smoothed random walk a_n(t) in [0, 5]. A frame is

    frame(t) = drift(t) + sum_n (a_n(t) / 5) * blob_n + noise

clamped to [0, 1]. The intensities are the dense ground truth, so every claim
about learning per-frame intensity can be checked without external data.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .constants import INTENSITY_MAX, INTENSITY_MIN, THREADS_ENV_VAR
from .data import LabelTable, PackedVideo
from .exceptions import SplurgeSqcpcConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic dataset.

    ``blob_positions`` holds one (row, col) per channel; when empty the blobs
    are spread evenly on a circle around the frame centre.
    """

    num_videos: int = 20
    num_frames: int = 200
    num_intensities: int = 3
    channels: int = 1
    height: int = 16
    width: int = 16
    blob_sigma: float = 1.5
    blob_positions: tuple[tuple[float, float], ...] = ()
    smoothness: float = 3.0
    walk_step: float = 0.6
    drift: float = 0.05
    noise: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.num_videos, self.num_frames, self.num_intensities, self.channels, self.height, self.width) < 1:
            raise SplurgeSqcpcConfigError(message="synthetic sizes must be positive", error_code="invalid-synth")
        if self.blob_sigma <= 0 or self.noise < 0 or self.drift < 0 or self.walk_step < 0 or self.smoothness < 0:
            raise SplurgeSqcpcConfigError(
                message="blob_sigma must be positive; noise, drift, walk_step and smoothness non-negative",
                error_code="invalid-synth",
            )
        if self.blob_positions and len(self.blob_positions) != self.num_intensities:
            raise SplurgeSqcpcConfigError(
                message=f"expected {self.num_intensities} blob positions, got {len(self.blob_positions)}",
                error_code="invalid-synth",
            )
        positions = self.positions()
        for i in range(len(positions)):
            for j in range(i + 1, len(positions)):
                distance = float(np.hypot(*(positions[i] - positions[j])))
                if distance < 2.0 * self.blob_sigma:
                    raise SplurgeSqcpcConfigError(
                        message=(
                            f"blobs {i} and {j} are {distance:.3f} apart, "
                            f"closer than 2*sigma = {2.0 * self.blob_sigma:.3f}"
                        ),
                        error_code="overlapping-blobs",
                    )

    def positions(self) -> np.ndarray:
        if self.blob_positions:
            return np.asarray(self.blob_positions, dtype=np.float64)
        centre = np.array([(self.height - 1) / 2.0, (self.width - 1) / 2.0])
        if self.num_intensities == 1:
            return centre[None, :]
        radius = 0.3 * min(self.height, self.width)
        angles = np.pi / 2.0 + 2.0 * np.pi * np.arange(self.num_intensities) / self.num_intensities
        return centre + radius * np.stack([-np.sin(angles), np.cos(angles)], axis=1)


@dataclass(frozen=True)
class SynthResult:
    videos: list[PackedVideo]
    dense: LabelTable


def worker_count() -> int:
    """Thread cap from ``SQCPC_THREADS``; unset or 0 means one per CPU."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    try:
        requested = int(raw) if raw else 0
    except ValueError as e:
        raise SplurgeSqcpcConfigError(
            message=f"{THREADS_ENV_VAR} must be a non-negative integer, got {raw!r}",
            error_code="invalid-threads",
        ) from e
    if requested < 0:
        raise SplurgeSqcpcConfigError(
            message=f"{THREADS_ENV_VAR} must be a non-negative integer, got {requested}",
            error_code="invalid-threads",
        )
    return requested or os.cpu_count() or 1


def blob_images(spec: SynthSpec) -> np.ndarray:
    """Unit-peak Gaussian blobs [N, H, W]."""
    rows = np.arange(spec.height, dtype=np.float64)[:, None]
    cols = np.arange(spec.width, dtype=np.float64)[None, :]
    return np.stack(
        [
            np.exp(-((rows - r) ** 2 + (cols - c) ** 2) / (2.0 * spec.blob_sigma**2))
            for r, c in spec.positions()
        ]
    )


def intensity_curves(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Clipped, smoothed random walks [T, N] in [0, 5]."""
    steps = rng.normal(0.0, spec.walk_step, size=(spec.num_frames, spec.num_intensities))
    walk = np.empty_like(steps)
    level = rng.uniform(INTENSITY_MIN, INTENSITY_MAX, size=spec.num_intensities)
    for t in range(spec.num_frames):
        level = np.clip(level + steps[t], INTENSITY_MIN, INTENSITY_MAX)
        walk[t] = level
    if spec.smoothness > 0:
        walk = gaussian_filter1d(walk, spec.smoothness, axis=0, mode="nearest")
    return np.clip(walk, INTENSITY_MIN, INTENSITY_MAX)


def render_frames(
    spec: SynthSpec,
    blobs: np.ndarray,
    curves: np.ndarray,
    drift: np.ndarray,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """Compose frames [T, C, H, W] from intensities [T, N] and a background level [T]."""
    frames = drift[:, None, None] + np.einsum("tn,nhw->thw", curves / INTENSITY_MAX, blobs)
    frames = np.repeat(frames[:, None], spec.channels, axis=1)
    if noise is not None:
        frames = frames + noise
    return np.clip(frames, 0.0, 1.0).astype(np.float32)


def _generate_video(spec: SynthSpec, blobs: np.ndarray, seed: np.random.SeedSequence) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    curves = intensity_curves(spec, rng)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    t = np.arange(spec.num_frames, dtype=np.float64)
    drift = spec.drift * 0.5 * (1.0 + np.sin(2.0 * np.pi * t / spec.num_frames + phase))
    shape = (spec.num_frames, spec.channels, spec.height, spec.width)
    noise = rng.normal(0.0, spec.noise, size=shape) if spec.noise > 0 else None
    return render_frames(spec, blobs, curves, drift, noise), curves


def synth_generate(spec: SynthSpec, workers: int | None = None) -> SynthResult:
    """Generate ``spec.num_videos`` videos and their dense intensity labels.

    Each video draws from its own generator spawned from ``spec.seed``, so the
    result is bitwise identical for any worker count.
    """
    blobs = blob_images(spec)
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.num_videos)
    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        generated = list(pool.map(lambda s: _generate_video(spec, blobs, s), seeds))
    videos = []
    rows = []
    for index, (frames, curves) in enumerate(generated):
        video_id = f"vid{index:03d}"
        videos.append(PackedVideo(video_id, frames))
        rows.extend((video_id, t, curves[t]) for t in range(spec.num_frames))
    logger.info(f"Generated {spec.num_videos} synthetic videos of {spec.num_frames} frames")
    return SynthResult(videos, LabelTable.from_rows(rows, spec.num_intensities))
