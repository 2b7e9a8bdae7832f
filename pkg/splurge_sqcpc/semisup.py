"""Training stages and evaluation.

Stage one minimizes the pretext NCE loss over strided windows of the training
videos. Stage two fine-tunes on sparse labels: every labeled frame is placed at
a random offset ``o`` inside a window of T consecutive frames, the network is
run over frames ``0..o`` only and the squared error at ``o`` is backpropagated
through time. Evaluation runs the GRU over whole videos and scores the
predictions at labeled frames with ICC and MAE per intensity dimension.

DOMAINS: ['training', 'bptt', 'evaluation']
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .constants import (
    FINETUNE_BEST,
    FINETUNE_LAST,
    FINETUNE_LOG,
    PRETEXT_BEST,
    PRETEXT_LAST,
    PRETEXT_LOG,
    TOP_N,
)
from .cpc import PretextBatch, pretext_loss, top_n_accuracy
from .data import AugmentParams, Dataset, LabelTable, augment, pad_to_length, pretext_windows
from .diffcore import (
    AdamState,
    BatchNormState,
    NormMode,
    Tensor,
    adam_step,
    concat,
    mul,
    reshape,
    square,
    sub,
    sum_all,
    take_rows,
)
from .exceptions import SplurgeSqcpcConfigError, SplurgeSqcpcDataError, SplurgeSqcpcShapeError, SplurgeSqcpcValueError
from .fileio import read_lines, write_text
from .metrics import PairedSeries, icc31, mae
from .model import GruState, ModelBundle, conv_gru_step, feature_extract, regress_head

logger = logging.getLogger(__name__)

Stage = Literal["pretext", "finetune"]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training stage.

    Defaults are the desk profile; :meth:`published` returns the published settings.
    """

    stage: Stage
    seq_len: int = 10
    context_len: int = 6
    batch_size: int = 8
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 1e-5
    epochs: int = 10
    seed: int = 0
    init: str = "scratch"
    frame_stride: int = 2
    window_hop: int = 4
    augment: bool = False
    augment_params: AugmentParams = field(default_factory=AugmentParams)

    def __post_init__(self) -> None:
        if self.stage not in ("pretext", "finetune"):
            raise SplurgeSqcpcConfigError(message=f"unknown stage {self.stage!r}", error_code="invalid-stage")
        if min(self.seq_len, self.batch_size, self.frame_stride, self.window_hop) < 1 or self.epochs < 0:
            raise SplurgeSqcpcConfigError(
                message="seq_len, batch_size, frame_stride and window_hop must be positive, epochs non-negative",
                error_code="invalid-train-config",
            )
        if self.stage == "pretext" and not 1 <= self.context_len < self.seq_len:
            raise SplurgeSqcpcConfigError(
                message=f"pretext needs 1 <= context_len < seq_len, got {self.context_len} and {self.seq_len}",
                error_code="invalid-train-config",
            )
        if not math.isfinite(self.lr) or self.lr < 0 or self.weight_decay < 0:
            raise SplurgeSqcpcConfigError(
                message="lr and weight_decay must be finite and non-negative",
                error_code="invalid-train-config",
            )

    @classmethod
    def published(cls, stage: Stage, **overrides: object) -> TrainConfig:
        """Published settings: 15-frame windows with 10 context frames, 20 sequences per batch."""
        if stage == "pretext":
            base: dict[str, object] = {"seq_len": 15, "context_len": 10, "batch_size": 20, "lr": 1e-3}
        else:
            base = {"seq_len": 15, "context_len": 10, "batch_size": 4, "lr": 1e-5, "betas": (0.5, 0.999)}
        base.update(weight_decay=1e-5, frame_stride=2)
        base.update(overrides)
        return cls(stage=stage, **base)  # type: ignore[arg-type]


# Windows -----------------------------------------------------------------


@dataclass(frozen=True)
class WindowSample:
    """A window of ``length`` frames starting at ``start``; the labeled frame sits at ``offset``."""

    video_id: str
    start: int
    length: int
    offset: int

    def __post_init__(self) -> None:
        if self.start < 0 or not 0 <= self.offset < self.length:
            raise SplurgeSqcpcValueError(
                message=f"invalid window start={self.start} offset={self.offset} length={self.length}",
                error_code="invalid-window",
            )

    @property
    def labeled_index(self) -> int:
        return self.start + self.offset


def feasible_offsets(video_len: int, labeled_idx: int, seq_len: int) -> range:
    return range(max(0, labeled_idx + seq_len - video_len), min(seq_len - 1, labeled_idx) + 1)


def sample_window(
    video_len: int, labeled_idx: int, seq_len: int, rng: np.random.Generator, video_id: str = ""
) -> WindowSample:
    """Place a labeled frame at a uniformly drawn feasible offset of a window.

    Raises:
        SplurgeSqcpcValueError: If the video is shorter than the window or the index is out of range.
    """
    if video_len < seq_len:
        raise SplurgeSqcpcValueError(
            message=f"video of {video_len} frames is shorter than the window of {seq_len}",
            error_code="video-too-short",
        )
    if not 0 <= labeled_idx < video_len:
        raise SplurgeSqcpcValueError(
            message=f"labeled frame {labeled_idx} outside a video of {video_len} frames",
            error_code="index-range",
        )
    options = feasible_offsets(video_len, labeled_idx, seq_len)
    offset = int(rng.integers(options.start, options.stop))
    return WindowSample(video_id, labeled_idx - offset, seq_len, offset)


# Losses and steps --------------------------------------------------------


def supervised_loss(pred: Tensor, label: Tensor) -> Tensor:
    """Squared L2 norm over the N intensities, averaged over the batch."""
    if pred.shape != label.shape or pred.ndim != 2:
        raise SplurgeSqcpcShapeError(
            message=f"supervised_loss: prediction {pred.shape} and label {label.shape} must be equal [B, N]",
            error_code="dimension-mismatch",
        )
    return mul(sum_all(square(sub(pred, label))), 1.0 / pred.shape[0])


def hidden_at(frames: Tensor, offset: int, theta: Mapping[str, Tensor], bundle: ModelBundle) -> Tensor:
    """Hidden state [1, Cf, Hf, Wf] after frames ``0..offset`` of one window [T, C, H, W].

    Frames after ``offset`` are never touched. Without a temporal model the
    extractor grid of frame ``offset`` is returned directly.
    """
    config = bundle.config
    if not config.temporal:
        return feature_extract(take_rows(frames, offset, offset + 1), theta, config)
    grids = feature_extract(take_rows(frames, 0, offset + 1), theta, config)
    state = GruState.zeros(1, config, frames.dtype)
    for t in range(offset + 1):
        state = conv_gru_step(take_rows(grids, t, t + 1), state, theta)
    return state.hidden


def finetune_loss(
    windows: Tensor,
    offsets: Sequence[int],
    labels: np.ndarray,
    theta: Mapping[str, Tensor],
    bundle: ModelBundle,
    head_state: BatchNormState,
    mode: NormMode = "train",
) -> tuple[Tensor, Tensor, BatchNormState]:
    """L_sup of windows [B, T, C, H, W] with the labeled frame of window b at ``offsets[b]``.

    Returns:
        The loss, the predictions [B, N] and the head's new norm state.
    """
    if windows.ndim != 5 or len(offsets) != windows.shape[0] or labels.shape[0] != windows.shape[0]:
        raise SplurgeSqcpcShapeError(
            message=f"finetune_loss: {windows.shape[0]} windows, {len(offsets)} offsets, {labels.shape[0]} labels",
            error_code="dimension-mismatch",
        )
    hidden = []
    for b, offset in enumerate(offsets):
        if not 0 <= offset < windows.shape[1]:
            raise SplurgeSqcpcValueError(
                message=f"offset {offset} outside a window of {windows.shape[1]} frames",
                error_code="index-range",
            )
        window = reshape(take_rows(windows, b, b + 1), windows.shape[1:])
        hidden.append(hidden_at(window, offset, theta, bundle))
    pred, new_state = regress_head(concat(hidden, axis=0), theta, head_state, mode)
    loss = supervised_loss(pred, Tensor(labels.astype(pred.dtype)))
    return loss, pred, new_state


def _apply_update(bundle: ModelBundle, theta: Mapping[str, Tensor], adam: AdamState, config: TrainConfig) -> AdamState:
    grads = {name: tensor.grad for name, tensor in theta.items() if tensor.grad is not None}
    bundle.params, adam = adam_step(bundle.params, grads, adam, config.lr, config.betas, config.weight_decay)
    return adam


def finetune_step(
    bundle: ModelBundle,
    adam: AdamState,
    windows: np.ndarray,
    offsets: Sequence[int],
    labels: np.ndarray,
    config: TrainConfig,
) -> tuple[float, AdamState]:
    """One supervised update; ``bundle`` parameters and head statistics are replaced in place."""
    theta = bundle.tensors(requires_grad=True)
    loss, _, head_state = finetune_loss(Tensor(windows), offsets, labels, theta, bundle, bundle.head_state, "train")
    loss.backward()
    adam = _apply_update(bundle, theta, adam, config)
    bundle.set_head_state(head_state)
    return loss.item(), adam


def pretext_step(
    bundle: ModelBundle, adam: AdamState, frames: np.ndarray, config: TrainConfig
) -> tuple[float, Tensor, AdamState]:
    """One NCE update on windows [B, T, C, H, W]; returns (loss, scores, new optimizer state)."""
    theta = bundle.tensors(requires_grad=True)
    loss, scores = pretext_loss(PretextBatch.of(frames, config.context_len), theta, bundle.config)
    loss.backward()
    adam = _apply_update(bundle, theta, adam, config)
    return loss.item(), scores, adam


# Metrics log -------------------------------------------------------------


@dataclass(frozen=True)
class EpochRecord:
    """Metrics of one epoch as (split, metric, value) groups in a fixed order."""

    epoch: int
    groups: tuple[tuple[str, str, float], ...]

    def value(self, split: str, metric: str) -> float:
        for group_split, group_metric, value in self.groups:
            if (group_split, group_metric) == (split, metric):
                return value
        raise KeyError(f"{split}/{metric}")

    def to_line(self) -> str:
        cells = [str(self.epoch)]
        for split, metric, value in self.groups:
            cells.extend([split, metric, repr(float(value))])
        return "\t".join(cells)

    @classmethod
    def from_line(cls, line: str) -> EpochRecord:
        cells = line.split("\t")
        try:
            if len(cells) < 4 or (len(cells) - 1) % 3:
                raise ValueError(f"{len(cells)} cells")
            triples = zip(cells[1::3], cells[2::3], cells[3::3], strict=True)
            return cls(int(cells[0]), tuple((split, metric, float(value)) for split, metric, value in triples))
        except ValueError as e:
            raise SplurgeSqcpcDataError(
                message=f"malformed metrics line {line!r}: {e}",
                error_code="bad-metrics-line",
            ) from e


@dataclass
class TrainingResult:
    best_checkpoint: Path
    last_checkpoint: Path
    log_path: Path
    history: list[EpochRecord]
    adam: AdamState
    best_epoch: int


def _batches(count: int, batch_size: int, drop_last: bool) -> list[range]:
    if count <= batch_size:
        return [range(0, count)] if count else []
    full = count // batch_size
    chunks = [range(i * batch_size, (i + 1) * batch_size) for i in range(full)]
    if not drop_last and count % batch_size:
        chunks.append(range(full * batch_size, count))
    return chunks


# Pretext training --------------------------------------------------------


def _resumed_best(log_path: Path, best_path: Path, start_epoch: int) -> tuple[float, int]:
    """Best validation Top-1 and its epoch among the logged epochs up to ``start_epoch``."""
    best_top1, best_epoch = -1.0, start_epoch
    if start_epoch == 0 or not (log_path.is_file() and best_path.is_file()):
        return best_top1, best_epoch
    for line in read_lines(log_path):
        if not line.strip():
            continue
        record = EpochRecord.from_line(line)
        if record.epoch <= start_epoch and record.value("val", "top1") > best_top1:
            best_top1, best_epoch = record.value("val", "top1"), record.epoch
    return best_top1, best_epoch


def _pretext_index(dataset: Dataset, video_ids: Sequence[str], config: TrainConfig) -> list[tuple[str, np.ndarray]]:
    windows = []
    for vid in video_ids:
        found = pretext_windows(dataset.lengths[vid], config.seq_len, config.frame_stride, config.window_hop)
        if not found:
            logger.warning(f"Skipping video {vid}: {dataset.lengths[vid]} frames is too short for a pretext window")
        windows.extend((vid, indices) for indices in found)
    return windows


def _validate_pretext(
    bundle: ModelBundle, dataset: Dataset, windows: list[tuple[str, np.ndarray]], config: TrainConfig
) -> dict[int, float]:
    theta = bundle.tensors()
    totals = dict.fromkeys(TOP_N, 0.0)
    chunks = _batches(len(windows), config.batch_size, drop_last=True)
    for chunk in chunks:
        frames = np.stack([dataset.videos[windows[i][0]].frames[windows[i][1]] for i in chunk])
        _, scores = pretext_loss(PretextBatch.of(frames, config.context_len), theta, bundle.config)
        for n in TOP_N:
            totals[n] += top_n_accuracy(scores, min(n, scores.shape[0]))
    return {n: total / len(chunks) for n, total in totals.items()}


def train_pretext(
    dataset: Dataset,
    config: TrainConfig,
    bundle: ModelBundle,
    out_dir: str | Path,
    adam: AdamState | None = None,
    start_epoch: int = 0,
) -> TrainingResult:
    """Minimize the NCE loss for ``config.epochs`` epochs after ``start_epoch``.

    Writes ``pretext_last.sqck`` every epoch, ``pretext_best.sqck`` whenever
    validation Top-1 improves, and one metrics line per epoch.

    Raises:
        SplurgeSqcpcConfigError: If the network has no temporal model.
        SplurgeSqcpcDataError: If no training video yields a window.
    """
    if not bundle.config.temporal:
        raise SplurgeSqcpcConfigError(
            message="pretext training needs the temporal model (temporal = true)",
            error_code="pretext-needs-temporal",
        )
    out = Path(out_dir)
    train_windows = _pretext_index(dataset, dataset.train_ids, config)
    if not train_windows:
        raise SplurgeSqcpcDataError(
            message=f"no training video has the {config.frame_stride * (config.seq_len - 1) + 1} frames a window needs",
            error_code="empty-dataset",
        )
    val_windows = _pretext_index(dataset, dataset.val_ids, config)
    if not val_windows:
        logger.warning("No validation windows; reporting Top-n on training windows")
        val_windows = train_windows

    adam = adam or AdamState.zeros(bundle.params)
    log_path = out / PRETEXT_LOG
    if start_epoch == 0:
        write_text(log_path, [])
    history: list[EpochRecord] = []
    best_path, last_path = out / PRETEXT_BEST, out / PRETEXT_LAST
    best_top1, best_epoch = _resumed_best(log_path, best_path, start_epoch)
    if best_top1 >= 0.0:
        logger.info(f"Resumed best validation Top-1 {best_top1:.3f} from epoch {best_epoch}")

    for epoch in range(start_epoch + 1, start_epoch + config.epochs + 1):
        rng = np.random.default_rng([config.seed, epoch])
        order = rng.permutation(len(train_windows))
        losses = []
        for chunk in _batches(len(order), config.batch_size, drop_last=True):
            frames = []
            for i in chunk:
                vid, indices = train_windows[order[i]]
                window = dataset.videos[vid].frames[indices]
                frames.append(augment(window, config.augment_params, rng) if config.augment else window)
            loss, _, adam = pretext_step(bundle, adam, np.stack(frames), config)
            logger.debug(f"pretext epoch {epoch} step {adam.step}: loss {loss:.6f}")
            losses.append(loss)
        top = _validate_pretext(bundle, dataset, val_windows, config)
        record = EpochRecord(
            epoch,
            (("train", "nce_loss", float(np.mean(losses))), *(("val", f"top{n}", top[n]) for n in TOP_N)),
        )
        history.append(record)
        write_text(log_path, [record.to_line()], append=True)
        logger.info(
            f"pretext epoch {epoch}: loss {record.value('train', 'nce_loss'):.4f}, "
            f"top1/3/5 {top[1]:.3f}/{top[3]:.3f}/{top[5]:.3f}"
        )
        if top[1] > best_top1:
            best_top1, best_epoch = top[1], epoch
            bundle.save(best_path, adam, epoch)
        bundle.save(last_path, adam, epoch)
    return TrainingResult(best_path, last_path, log_path, history, adam, best_epoch)


# Fine-tuning -------------------------------------------------------------


def _window_for(
    dataset: Dataset, vid: str, frame: int, seq_len: int, rng: np.random.Generator
) -> tuple[np.ndarray, int]:
    frames, padded = pad_to_length(dataset.videos[vid].frames, seq_len)
    sample = sample_window(frames.shape[0], frame + padded, seq_len, rng, vid)
    return frames[sample.start : sample.start + seq_len], sample.offset


def train_finetune(
    dataset: Dataset,
    labels: LabelTable,
    config: TrainConfig,
    bundle: ModelBundle,
    out_dir: str | Path,
    eval_labels: LabelTable | None = None,
) -> TrainingResult:
    """Supervised training on sparse labels with per-epoch window re-sampling.

    Each epoch visits every labeled frame once in a shuffled order, in batches
    of ``config.batch_size`` windows (the last one may be smaller). Validation
    ICC/MAE use ``eval_labels`` (the training labels when absent).

    Raises:
        SplurgeSqcpcDataError: If the label table is empty or names a missing frame.
    """
    if len(labels) == 0:
        raise SplurgeSqcpcDataError(message="no labeled frames to fine-tune on", error_code="empty-labels")
    labels.check_frames(dataset.lengths)
    if labels.num_intensities != bundle.config.num_intensities:
        raise SplurgeSqcpcConfigError(
            message=(
                f"labels carry {labels.num_intensities} intensities, "
                f"network predicts {bundle.config.num_intensities}"
            ),
            error_code="intensity-mismatch",
        )
    out = Path(out_dir)
    seq_len = config.seq_len if bundle.config.temporal else 1
    keys = labels.keys()
    adam = AdamState.zeros(bundle.params)
    log_path = out / FINETUNE_LOG
    write_text(log_path, [])
    history: list[EpochRecord] = []
    best_icc, best_epoch = -math.inf, 0
    best_path, last_path = out / FINETUNE_BEST, out / FINETUNE_LAST

    for epoch in range(1, config.epochs + 1):
        rng = np.random.default_rng([config.seed, len(keys), epoch])
        order = rng.permutation(len(keys))
        losses = []
        for chunk in _batches(len(order), config.batch_size, drop_last=False):
            windows, offsets = [], []
            for i in chunk:
                vid, frame = keys[order[i]]
                window, offset = _window_for(dataset, vid, frame, seq_len, rng)
                windows.append(augment(window, config.augment_params, rng) if config.augment else window)
                offsets.append(offset)
            targets = labels.values[order[list(chunk)]]
            loss, adam = finetune_step(bundle, adam, np.stack(windows), offsets, targets, config)
            logger.debug(f"finetune epoch {epoch} step {adam.step}: loss {loss:.6f}")
            losses.append(loss)
        report = evaluate(bundle, dataset, eval_labels if eval_labels is not None else labels)
        groups: list[tuple[str, str, float]] = [("train", "sup_loss", float(np.mean(losses)))]
        for row in report.rows:
            groups.extend([("val", f"{row.name}_icc", row.icc), ("val", f"{row.name}_mae", row.mae)])
        groups.extend([("val", "mean_icc", report.mean_icc), ("val", "mean_mae", report.mean_mae)])
        record = EpochRecord(epoch, tuple(groups))
        history.append(record)
        write_text(log_path, [record.to_line()], append=True)
        logger.info(
            f"finetune epoch {epoch}: loss {record.value('train', 'sup_loss'):.4f}, "
            f"mean ICC {report.mean_icc:.3f}, mean MAE {report.mean_mae:.3f}"
        )
        if report.mean_icc > best_icc:
            best_icc, best_epoch = report.mean_icc, epoch
            bundle.save(best_path, adam, epoch)
        bundle.save(last_path, adam, epoch)
    return TrainingResult(best_path, last_path, log_path, history, adam, best_epoch)


# Evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class DimensionMetrics:
    name: str
    icc: float
    mae: float
    degenerate: bool = False


@dataclass(frozen=True)
class EvaluationReport:
    """Per-dimension ICC and MAE in ascending dimension order."""

    rows: tuple[DimensionMetrics, ...]

    @property
    def mean_icc(self) -> float:
        return float(np.mean([row.icc for row in self.rows]))

    @property
    def mean_mae(self) -> float:
        return float(np.mean([row.mae for row in self.rows]))

    def tsv_lines(self) -> list[str]:
        lines = ["dimension\ticc\tmae"]
        lines.extend(f"{row.name}\t{row.icc!r}\t{row.mae!r}" for row in self.rows)
        lines.append(f"avg\t{self.mean_icc!r}\t{self.mean_mae!r}")
        return lines

    def text_lines(self) -> list[str]:
        table = [("dimension", "icc", "mae")]
        table.extend((row.name, f"{row.icc:.4f}", f"{row.mae:.4f}") for row in self.rows)
        table.append(("avg", f"{self.mean_icc:.4f}", f"{self.mean_mae:.4f}"))
        widths = [max(len(line[col]) for line in table) for col in range(3)]
        return [
            "  ".join([line[0].ljust(widths[0]), line[1].rjust(widths[1]), line[2].rjust(widths[2])]).rstrip()
            for line in table
        ]


def predict_frames(bundle: ModelBundle, frames: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    """Eval-mode predictions [len(indices), N] for frames of one whole video, run in order."""
    theta = bundle.tensors()
    config = bundle.config
    grids = feature_extract(Tensor(frames), theta, config)
    wanted = set(int(i) for i in indices)
    hidden: dict[int, Tensor] = {}
    if config.temporal:
        state = GruState.zeros(1, config, frames.dtype)
        for t in range(max(wanted) + 1):
            state = conv_gru_step(take_rows(grids, t, t + 1), state, theta)
            if t in wanted:
                hidden[t] = state.hidden
    else:
        hidden = {t: take_rows(grids, t, t + 1) for t in wanted}
    pred, _ = regress_head(concat([hidden[int(i)] for i in indices], axis=0), theta, bundle.head_state, "eval")
    return pred.numpy().astype(np.float64)


def evaluate(bundle: ModelBundle, dataset: Dataset, labels: LabelTable) -> EvaluationReport:
    """ICC and MAE per intensity dimension over exactly the labeled frames.

    Raises:
        SplurgeSqcpcDataError: If the label table is empty or names a missing frame.
    """
    if len(labels) == 0:
        raise SplurgeSqcpcDataError(message="cannot evaluate on an empty label set", error_code="empty-labels")
    labels.check_frames(dataset.lengths)
    truths, preds = [], []
    for vid in sorted(set(labels.video_ids)):
        frames, values = labels.for_video(vid)
        preds.append(predict_frames(bundle, dataset.videos[vid].frames, frames))
        truths.append(values)
    y, y_pred = np.concatenate(truths), np.concatenate(preds)
    rows = []
    for n in range(labels.num_intensities):
        series = PairedSeries.of(y[:, n], y_pred[:, n])
        icc = icc31(series) if len(series) >= 2 else None
        rows.append(
            DimensionMetrics(
                name=f"au_{n}",
                icc=icc.value if icc is not None else 0.0,
                mae=mae(series),
                degenerate=icc is None or icc.degenerate,
            )
        )
        if rows[-1].degenerate:
            logger.warning(f"ICC of dimension au_{n} is degenerate; reported as 0")
    return EvaluationReport(tuple(rows))


def write_report(out_dir: str | Path, report: EvaluationReport, tsv_name: str, txt_name: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    return write_text(out / tsv_name, report.tsv_lines()), write_text(out / txt_name, report.text_lines())
