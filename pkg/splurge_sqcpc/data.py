"""Dataset ingestion, augmentation and sparse-label selection.

A dataset directory holds:

- ``manifest.txt``: one ``video_id path num_frames`` line per video
- ``videos/<id>.sqf``: packed frames (see :func:`encode_packed`)
- ``labels_dense.csv`` / ``labels_sparse.csv``: per-frame intensities
- ``split.txt``: one ``video_id train|val`` line per video

DOMAINS: ['data', 'augmentation', 'labels']
"""

from __future__ import annotations

import logging
import math
import struct
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.ndimage import affine_transform

from .constants import (
    DENSE_LABELS_FILE,
    INTENSITY_MAX,
    INTENSITY_MIN,
    MANIFEST_FILE,
    PACKED_HEADER_SIZE,
    PACKED_MAGIC,
    SPARSE_LABELS_FILE,
    SPLIT_FILE,
    VIDEO_DIR,
    VIDEO_SUFFIX,
)
from .exceptions import SplurgeSqcpcDataError, SplurgeSqcpcShapeError, SplurgeSqcpcValueError
from .fileio import read_bytes, read_lines, write_bytes, write_text

logger = logging.getLogger(__name__)

SplitName = Literal["train", "val"]

_PACKED_HEADER = struct.Struct("<4sIIII")


# Packed videos -----------------------------------------------------------


@dataclass(frozen=True)
class PackedVideo:
    """One video as float32 frames [T, C, H, W] with values in [0, 1]."""

    video_id: str
    frames: np.ndarray

    def __post_init__(self) -> None:
        if self.frames.ndim != 4 or self.frames.shape[0] < 1:
            raise SplurgeSqcpcDataError(
                message=f"video {self.video_id}: frames must be [T>=1, C, H, W], got {self.frames.shape}",
                error_code="bad-shape",
                details={"video": self.video_id},
            )
        _check_unit_range(self.frames, self.video_id)

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])


def _check_unit_range(frames: np.ndarray, video_id: str) -> None:
    bad = ~np.isfinite(frames) | (frames < 0.0) | (frames > 1.0)
    if bad.any():
        flat = int(np.flatnonzero(bad)[0])
        value = frames.reshape(-1)[flat]
        raise SplurgeSqcpcDataError(
            message=f"video {video_id}: value {value} at element {flat} outside [0, 1]",
            error_code="out-of-range",
            details={"video": video_id, "element": flat},
        )


def encode_packed(frames: np.ndarray) -> bytes:
    """SQF1 bytes: magic, u32 T, C, H, W, then T*C*H*W little-endian float32 values."""
    t, c, h, w = frames.shape
    return _PACKED_HEADER.pack(PACKED_MAGIC, t, c, h, w) + np.ascontiguousarray(frames, dtype="<f4").tobytes()


def decode_packed(blob: bytes, video_id: str, source: str = "<memory>") -> PackedVideo:
    """Parse SQF1 bytes.

    Raises:
        SplurgeSqcpcDataError: On bad magic, a payload of the wrong size, or values outside [0, 1].
    """
    if len(blob) < PACKED_HEADER_SIZE:
        raise SplurgeSqcpcDataError(
            message=f"{source}: expected a {PACKED_HEADER_SIZE}-byte header, got {len(blob)} bytes",
            error_code="truncated",
            details={"path": source},
        )
    magic, t, c, h, w = _PACKED_HEADER.unpack_from(blob)
    if magic != PACKED_MAGIC:
        raise SplurgeSqcpcDataError(
            message=f"{source}: bad magic {magic!r}, expected {PACKED_MAGIC!r}",
            error_code="bad-magic",
            details={"path": source},
        )
    expected = PACKED_HEADER_SIZE + t * c * h * w * 4
    if len(blob) != expected:
        raise SplurgeSqcpcDataError(
            message=f"{source}: expected {expected} bytes for {t}x{c}x{h}x{w} frames, got {len(blob)}",
            error_code="truncated" if len(blob) < expected else "trailing-bytes",
            details={"path": source, "expected": expected, "actual": len(blob)},
        )
    frames = np.frombuffer(blob, dtype="<f4", offset=PACKED_HEADER_SIZE).reshape(t, c, h, w).astype(np.float32)
    return PackedVideo(video_id, frames)


def write_packed(path: str | Path, video: PackedVideo) -> Path:
    return write_bytes(path, encode_packed(video.frames))


def load_packed(path: str | Path, video_id: str | None = None) -> PackedVideo:
    return decode_packed(read_bytes(path), video_id or Path(path).stem, str(path))


# Labels ------------------------------------------------------------------


@dataclass(frozen=True)
class LabelTable:
    """Rows of (video id, frame index, N intensities in [0, 5]), unique by (video, frame)."""

    video_ids: tuple[str, ...]
    frames: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        rows = len(self.video_ids)
        if self.values.ndim != 2 or self.frames.shape != (rows,) or self.values.shape[0] != rows:
            raise SplurgeSqcpcShapeError(
                message="label table columns have inconsistent lengths",
                error_code="dimension-mismatch",
            )
        seen: set[tuple[str, int]] = set()
        for key in self.keys():
            if key in seen:
                raise SplurgeSqcpcDataError(
                    message=f"duplicate label for video {key[0]} frame {key[1]}",
                    error_code="duplicate-label",
                    details={"video": key[0], "frame": key[1]},
                )
            seen.add(key)
        if self.values.size and (
            not np.all(np.isfinite(self.values))
            or self.values.min() < INTENSITY_MIN
            or self.values.max() > INTENSITY_MAX
        ):
            raise SplurgeSqcpcDataError(
                message=f"label intensities must lie in [{INTENSITY_MIN}, {INTENSITY_MAX}]",
                error_code="out-of-range",
            )

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, int, Sequence[float]]], num_intensities: int) -> LabelTable:
        ordered = sorted(rows, key=lambda row: (row[0], row[1]))
        return cls(
            video_ids=tuple(row[0] for row in ordered),
            frames=np.array([row[1] for row in ordered], dtype=np.int64),
            values=np.array([list(row[2]) for row in ordered], dtype=np.float64).reshape(len(ordered), num_intensities),
        )

    @property
    def num_intensities(self) -> int:
        return int(self.values.shape[1])

    def __len__(self) -> int:
        return len(self.video_ids)

    def keys(self) -> list[tuple[str, int]]:
        return [(vid, int(frame)) for vid, frame in zip(self.video_ids, self.frames, strict=True)]

    def for_video(self, video_id: str) -> tuple[np.ndarray, np.ndarray]:
        mask = np.array([vid == video_id for vid in self.video_ids], dtype=bool)
        order = np.argsort(self.frames[mask], kind="stable")
        return self.frames[mask][order], self.values[mask][order]

    def select(self, keys: Iterable[tuple[str, int]]) -> LabelTable:
        """Rows for the given (video, frame) pairs.

        Raises:
            SplurgeSqcpcDataError: If a pair has no label.
        """
        index = {key: row for row, key in enumerate(self.keys())}
        rows = []
        for key in keys:
            if key not in index:
                raise SplurgeSqcpcDataError(
                    message=f"no label for video {key[0]} frame {key[1]}",
                    error_code="missing-label",
                    details={"video": key[0], "frame": key[1]},
                )
            row = index[key]
            rows.append((key[0], key[1], self.values[row]))
        return LabelTable.from_rows(rows, self.num_intensities)

    def restrict(self, video_ids: Iterable[str]) -> LabelTable:
        keep = set(video_ids)
        return LabelTable.from_rows(
            ((vid, frame, self.values[row]) for row, (vid, frame) in enumerate(self.keys()) if vid in keep),
            self.num_intensities,
        )

    def check_frames(self, lengths: Mapping[str, int]) -> None:
        """Raise if any row references a video or frame that does not exist."""
        for vid, frame in self.keys():
            if vid not in lengths or not 0 <= frame < lengths[vid]:
                raise SplurgeSqcpcDataError(
                    message=f"label references missing frame {frame} of video {vid}",
                    error_code="missing-frame",
                    details={"video": vid, "frame": frame},
                )


def write_labels(path: str | Path, table: LabelTable) -> Path:
    header = ",".join(["video_id", "frame_index", *(f"au_{n}" for n in range(table.num_intensities))])
    lines = [header]
    for row, (vid, frame) in enumerate(table.keys()):
        lines.append(",".join([vid, str(frame), *(repr(float(v)) for v in table.values[row])]))
    return write_text(path, lines)


def read_labels(path: str | Path) -> LabelTable:
    """Parse a ``video_id,frame_index,au_0,...`` CSV file.

    Raises:
        SplurgeSqcpcDataError: On a malformed header or row.
    """
    lines = [line for line in read_lines(path) if line.strip()]
    if not lines:
        raise SplurgeSqcpcDataError(message=f"{path}: empty label file", error_code="empty-labels")
    header = [cell.strip() for cell in lines[0].split(",")]
    num = len(header) - 2
    if header[:2] != ["video_id", "frame_index"] or num < 1 or header[2:] != [f"au_{n}" for n in range(num)]:
        raise SplurgeSqcpcDataError(
            message=f"{path}: header must be video_id,frame_index,au_0,...,au_N-1",
            error_code="bad-header",
            details={"path": str(path)},
        )
    rows: list[tuple[str, int, list[float]]] = []
    for number, line in enumerate(lines[1:], start=2):
        cells = [cell.strip() for cell in line.split(",")]
        try:
            if len(cells) != num + 2:
                raise ValueError(f"expected {num + 2} fields, got {len(cells)}")
            rows.append((cells[0], int(cells[1]), [float(cell) for cell in cells[2:]]))
        except ValueError as e:
            raise SplurgeSqcpcDataError(
                message=f"{path}:{number}: {e}",
                error_code="bad-row",
                details={"path": str(path), "line": number},
            ) from e
    return LabelTable.from_rows(rows, num)


# Manifest and split ------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    path: str
    num_frames: int


def write_manifest(path: str | Path, entries: Sequence[ManifestEntry]) -> Path:
    return write_text(path, [f"{e.video_id} {e.path} {e.num_frames}" for e in entries])


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    entries = []
    for number, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 3 or not fields[2].isdigit():
            raise SplurgeSqcpcDataError(
                message=f"{path}:{number}: expected 'video_id path num_frames', got {line!r}",
                error_code="bad-manifest",
                details={"path": str(path), "line": number},
            )
        entries.append(ManifestEntry(fields[0], fields[1], int(fields[2])))
    return entries


def write_split(path: str | Path, train_ids: Sequence[str], val_ids: Sequence[str]) -> Path:
    assignment = {vid: "train" for vid in train_ids} | {vid: "val" for vid in val_ids}
    return write_text(path, [f"{vid} {assignment[vid]}" for vid in sorted(assignment)])


def read_split(path: str | Path) -> tuple[list[str], list[str]]:
    train_ids: list[str] = []
    val_ids: list[str] = []
    for number, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 2 or fields[1] not in ("train", "val"):
            raise SplurgeSqcpcDataError(
                message=f"{path}:{number}: expected 'video_id train|val', got {line!r}",
                error_code="bad-split",
                details={"path": str(path), "line": number},
            )
        (train_ids if fields[1] == "train" else val_ids).append(fields[0])
    return train_ids, val_ids


def split_videos(video_ids: Sequence[str], val_fraction: float, seed: int) -> tuple[list[str], list[str]]:
    """Deterministic disjoint (train, val) split; each side keeps one video when there are two or more."""
    if not 0.0 <= val_fraction < 1.0:
        raise SplurgeSqcpcValueError(
            message=f"val_fraction must be in [0, 1), got {val_fraction}",
            error_code="invalid-fraction",
        )
    ids = sorted(video_ids)
    if len(ids) < 2:
        return ids, []
    n_val = min(max(int(math.floor(val_fraction * len(ids) + 0.5)), 1), len(ids) - 1)
    order = np.random.default_rng(seed).permutation(len(ids))
    val = sorted(ids[i] for i in order[:n_val])
    train = sorted(ids[i] for i in order[n_val:])
    return train, val


@dataclass
class Dataset:
    """A loaded dataset directory."""

    root: Path
    videos: dict[str, PackedVideo]
    train_ids: list[str]
    val_ids: list[str]
    dense: LabelTable | None = None
    sparse: LabelTable | None = None
    lengths: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.lengths = {vid: video.num_frames for vid, video in self.videos.items()}
        for table in (self.dense, self.sparse):
            if table is not None:
                table.check_frames(self.lengths)

    @classmethod
    def load(cls, root: str | Path, *, dense: bool = True, sparse: bool = True) -> Dataset:
        """Read manifest, videos, split and (optionally) label files under ``root``.

        Raises:
            SplurgeSqcpcOSError: If a required file is missing or unreadable.
            SplurgeSqcpcDataError: If contents are malformed or inconsistent.
        """
        base = Path(root)
        videos: dict[str, PackedVideo] = {}
        for entry in read_manifest(base / MANIFEST_FILE):
            video = load_packed(base / entry.path, entry.video_id)
            if video.num_frames != entry.num_frames:
                raise SplurgeSqcpcDataError(
                    message=(
                        f"video {entry.video_id}: manifest says {entry.num_frames} frames, "
                        f"file has {video.num_frames}"
                    ),
                    error_code="manifest-mismatch",
                    details={"video": entry.video_id},
                )
            videos[entry.video_id] = video
        if not videos:
            raise SplurgeSqcpcDataError(message=f"{base}: dataset has no videos", error_code="empty-dataset")
        train_ids, val_ids = read_split(base / SPLIT_FILE)
        unknown = sorted(set(train_ids + val_ids) - set(videos))
        if unknown:
            raise SplurgeSqcpcDataError(
                message=f"split names unknown videos: {', '.join(unknown)}",
                error_code="split-mismatch",
            )
        logger.info(f"Loaded {len(videos)} videos from {base} ({len(train_ids)} train, {len(val_ids)} val)")
        return cls(
            root=base,
            videos=dict(sorted(videos.items())),
            train_ids=sorted(train_ids),
            val_ids=sorted(val_ids),
            dense=read_labels(base / DENSE_LABELS_FILE) if dense else None,
            sparse=read_labels(base / SPARSE_LABELS_FILE) if sparse else None,
        )


# Windows -----------------------------------------------------------------


def pretext_windows(video_len: int, seq_len: int, frame_stride: int, window_hop: int) -> list[np.ndarray]:
    """Frame indices ``s, s+stride, ..., s+stride*(T-1)`` for ``s = 0, hop, 2*hop, ...`` inside the video."""
    if seq_len < 1 or frame_stride < 1 or window_hop < 1:
        raise SplurgeSqcpcValueError(
            message="seq_len, frame_stride and window_hop must be positive",
            error_code="invalid-window",
        )
    span = frame_stride * (seq_len - 1) + 1
    return [
        np.arange(start, start + span, frame_stride, dtype=np.int64)
        for start in range(0, video_len - span + 1, window_hop)
    ]


def pad_to_length(frames: np.ndarray, length: int) -> tuple[np.ndarray, int]:
    """Left-pad a short video by repeating its first frame; returns (frames, number of padded frames)."""
    missing = length - frames.shape[0]
    if missing <= 0:
        return frames, 0
    return np.concatenate([np.repeat(frames[:1], missing, axis=0), frames], axis=0), missing


# Augmentation ------------------------------------------------------------


@dataclass(frozen=True)
class AugmentParams:
    """Ranges of the per-window augmentation draw."""

    rotation: float = 20.0
    scale: float = 0.1
    flip: float = 0.5
    jitter: float = 0.05
    brightness: float = 0.1
    contrast: float = 0.1
    saturation: float = 0.1
    hue: float = 0.1


@dataclass(frozen=True)
class AugmentTransform:
    """One sampled transform, applied identically to every frame of a window."""

    angle: float = 0.0
    scale: float = 1.0
    shift: tuple[float, float] = (0.0, 0.0)
    flip: bool = False
    brightness: float = 0.0
    contrast: float = 1.0
    saturation: float = 1.0
    hue: float = 0.0

    @classmethod
    def sample(cls, params: AugmentParams, rng: np.random.Generator, height: int, width: int) -> AugmentTransform:
        angle = rng.uniform(-params.rotation, params.rotation)
        scale = rng.uniform(1.0 - params.scale, 1.0 + params.scale)
        shift_y = rng.uniform(-params.jitter, params.jitter) * height
        shift_x = rng.uniform(-params.jitter, params.jitter) * width
        flip = bool(rng.random() < params.flip)
        brightness = rng.uniform(-params.brightness, params.brightness)
        contrast = rng.uniform(1.0 - params.contrast, 1.0 + params.contrast)
        saturation = rng.uniform(1.0 - params.saturation, 1.0 + params.saturation)
        hue = rng.uniform(-params.hue, params.hue)
        return cls(angle, scale, (shift_y, shift_x), flip, brightness, contrast, saturation, hue)


_RGB_TO_YIQ = np.array([[0.299, 0.587, 0.114], [0.596, -0.274, -0.322], [0.211, -0.523, 0.312]])
_YIQ_TO_RGB = np.linalg.inv(_RGB_TO_YIQ)


def _resample(window: np.ndarray, transform: AugmentTransform) -> np.ndarray:
    height, width = window.shape[-2:]
    theta = np.deg2rad(transform.angle)
    # inverse map: output pixel -> input pixel, about the image centre
    inverse = np.array([[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]) / transform.scale
    centre = np.array([(height - 1) / 2.0, (width - 1) / 2.0])
    offset = centre - inverse @ (centre + np.asarray(transform.shift))
    out = np.empty_like(window)
    for t in range(window.shape[0]):
        for c in range(window.shape[1]):
            out[t, c] = affine_transform(window[t, c], inverse, offset=offset, order=1, mode="nearest")
    return out


def apply_augmentation(window: np.ndarray, transform: AugmentTransform) -> np.ndarray:
    """Apply one transform to a [T, C, H, W] window; the result is clamped to [0, 1]."""
    out = window
    if transform.angle != 0.0 or transform.scale != 1.0 or transform.shift != (0.0, 0.0):
        out = _resample(out, transform)
    if transform.flip:
        out = out[..., ::-1]
    if out.shape[1] == 3:
        if transform.saturation != 1.0:
            luma = np.einsum("k,tkhw->thw", _RGB_TO_YIQ[0], out)[:, None]
            out = luma + (out - luma) * transform.saturation
        if transform.hue != 0.0:
            angle = 2.0 * np.pi * transform.hue
            rotation = np.array(
                [[1.0, 0.0, 0.0], [0.0, np.cos(angle), -np.sin(angle)], [0.0, np.sin(angle), np.cos(angle)]]
            )
            out = np.einsum("ij,tjhw->tihw", _YIQ_TO_RGB @ rotation @ _RGB_TO_YIQ, out)
    if transform.contrast != 1.0:
        mean = out.mean(axis=(1, 2, 3), keepdims=True)
        out = (out - mean) * transform.contrast + mean
    if transform.brightness != 0.0:
        out = out + transform.brightness
    return np.clip(out, 0.0, 1.0).astype(window.dtype)


def augment(window: np.ndarray, params: AugmentParams, rng: np.random.Generator) -> np.ndarray:
    """Sample one transform for the window and apply it to all of its frames."""
    transform = AugmentTransform.sample(params, rng, *window.shape[-2:])
    return apply_augmentation(window, transform)


# Sparse labels -----------------------------------------------------------


def select_labeled_frames(
    frame_counts: Mapping[str, int], fraction: float, rng: np.random.Generator
) -> list[tuple[str, int]]:
    """Draw round(fraction * total) frames uniformly without replacement from all videos.

    Raises:
        SplurgeSqcpcValueError: If the fraction is outside (0, 1] or selects no frame.
    """
    if not 0.0 < fraction <= 1.0:
        raise SplurgeSqcpcValueError(
            message=f"label fraction must be in (0, 1], got {fraction}",
            error_code="invalid-fraction",
        )
    ids = sorted(frame_counts)
    counts = np.array([frame_counts[vid] for vid in ids], dtype=np.int64)
    total = int(counts.sum())
    count = int(math.floor(fraction * total + 0.5))
    if count == 0:
        raise SplurgeSqcpcValueError(
            message=f"label fraction {fraction} of {total} frames selects no frame",
            error_code="empty-selection",
        )
    chosen = np.sort(rng.choice(total, size=count, replace=False))
    bounds = np.cumsum(counts)
    owners = np.searchsorted(bounds, chosen, side="right")
    starts = bounds - counts
    selection = [(ids[owner], int(index - starts[owner])) for owner, index in zip(owners, chosen, strict=True)]
    logger.debug(f"Selected {count} of {total} frames (fraction {fraction})")
    return selection


def write_dataset(
    root: str | Path,
    videos: Sequence[PackedVideo],
    dense: LabelTable,
    sparse: LabelTable,
    train_ids: Sequence[str],
    val_ids: Sequence[str],
) -> Path:
    """Write a dataset directory readable by :meth:`Dataset.load`."""
    base = Path(root)
    entries = []
    for video in videos:
        relative = f"{VIDEO_DIR}/{video.video_id}{VIDEO_SUFFIX}"
        write_packed(base / relative, video)
        entries.append(ManifestEntry(video.video_id, relative, video.num_frames))
    write_manifest(base / MANIFEST_FILE, entries)
    write_labels(base / DENSE_LABELS_FILE, dense)
    write_labels(base / SPARSE_LABELS_FILE, sparse)
    write_split(base / SPLIT_FILE, train_ids, val_ids)
    logger.info(f"Wrote dataset {base}: {len(entries)} videos, {len(sparse)} sparse labels")
    return base
