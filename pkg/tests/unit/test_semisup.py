"""Unit tests for splurge_sqcpc.semisup module."""

from __future__ import annotations

import tempfile
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import chisquare

from splurge_sqcpc.data import (
    AugmentParams,
    AugmentTransform,
    Dataset,
    LabelTable,
    PackedVideo,
    apply_augmentation,
    write_dataset,
)
from splurge_sqcpc.diffcore import AdamState, Tensor, grad_check
from splurge_sqcpc.exceptions import (
    SplurgeSqcpcConfigError,
    SplurgeSqcpcDataError,
    SplurgeSqcpcShapeError,
    SplurgeSqcpcValueError,
)
from splurge_sqcpc.model import ModelBundle, NetworkConfig, feature_extract
from splurge_sqcpc.semisup import (
    DimensionMetrics,
    EpochRecord,
    EvaluationReport,
    TrainConfig,
    evaluate,
    feasible_offsets,
    finetune_loss,
    finetune_step,
    hidden_at,
    predict_frames,
    sample_window,
    supervised_loss,
    train_finetune,
    train_pretext,
    write_report,
)

TINY = NetworkConfig(
    input_height=8, input_width=8, extractor_widths=(2, 3), extractor_strides=(2, 2), num_intensities=2
)
FLAT = NetworkConfig(
    input_height=8, input_width=8, extractor_widths=(2, 3), extractor_strides=(2, 2), num_intensities=2, temporal=False
)


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def dataset(temp_dir: Path) -> Dataset:
    """Three 20-frame 8x8 videos: two for training, one for validation."""
    rng = np.random.default_rng(0)
    videos = [PackedVideo(f"vid00{i}", rng.random((20, 1, 8, 8)).astype(np.float32)) for i in range(3)]
    dense = LabelTable.from_rows(
        ((v.video_id, t, rng.uniform(0.0, 5.0, 2)) for v in videos for t in range(20)),
        2,
    )
    sparse = dense.select([("vid000", 3), ("vid001", 10)])
    write_dataset(temp_dir / "data", videos, dense, sparse, ["vid000", "vid001"], ["vid002"])
    return Dataset.load(temp_dir / "data")


def _pretext_config(**overrides: object) -> TrainConfig:
    base: dict[str, object] = {
        "seq_len": 4,
        "context_len": 2,
        "batch_size": 2,
        "epochs": 1,
        "frame_stride": 1,
        "window_hop": 4,
        "augment": False,
    }
    base.update(overrides)
    return TrainConfig(stage="pretext", **base)  # type: ignore[arg-type]


def _finetune_config(**overrides: object) -> TrainConfig:
    base: dict[str, object] = {"seq_len": 4, "batch_size": 1, "epochs": 2, "augment": False}
    base.update(overrides)
    return TrainConfig(stage="finetune", **base)  # type: ignore[arg-type]


class TestTrainConfig:
    """Test TrainConfig validation."""

    def test_unknown_stage(self) -> None:
        """Test stages other than pretext and finetune are rejected."""
        with pytest.raises(SplurgeSqcpcConfigError):
            TrainConfig(stage="warmup")  # type: ignore[arg-type]

    @pytest.mark.parametrize("context_len", [0, 10])
    def test_pretext_context(self, context_len: int) -> None:
        """Test pretext needs 1 <= C < T."""
        with pytest.raises(SplurgeSqcpcConfigError):
            TrainConfig(stage="pretext", seq_len=10, context_len=context_len)

    def test_negative_lr(self) -> None:
        """Test a negative learning rate is rejected."""
        with pytest.raises(SplurgeSqcpcConfigError):
            TrainConfig(stage="finetune", lr=-1e-3)

    def test_published_settings(self) -> None:
        """Test the published presets for both stages."""
        pretext = TrainConfig.published("pretext")
        finetune = TrainConfig.published("finetune", epochs=3)
        assert (pretext.seq_len, pretext.context_len, pretext.batch_size, pretext.lr) == (15, 10, 20, 1e-3)
        assert (finetune.lr, finetune.betas, finetune.epochs) == (1e-5, (0.5, 0.999), 3)


class TestSampleWindow:
    """Test the random window placement."""

    def test_late_label(self) -> None:
        """Test a label 5 frames from the end allows offsets 10..14 for T=15."""
        assert list(feasible_offsets(100, 95, 15)) == [10, 11, 12, 13, 14]

    def test_early_label(self) -> None:
        """Test a label at frame 7 allows offsets 0..7."""
        assert list(feasible_offsets(100, 7, 15)) == list(range(8))

    def test_video_equal_to_window(self) -> None:
        """Test a video of exactly T frames pins the window at 0."""
        rng = np.random.default_rng(0)
        for labeled in range(15):
            sample = sample_window(15, labeled, 15, rng)
            assert (sample.start, sample.offset) == (0, labeled)

    def test_window_contains_label(self) -> None:
        """Test every draw keeps the window inside the video with the label at the offset."""
        rng = np.random.default_rng(1)
        for _ in range(500):
            video_len = int(rng.integers(15, 60))
            labeled = int(rng.integers(0, video_len))
            sample = sample_window(video_len, labeled, 15, rng, "v")
            assert sample.start >= 0
            assert sample.start + 15 <= video_len
            assert sample.labeled_index == labeled

    def test_uniform_offsets(self) -> None:
        """Test offsets are uniform over the 15 feasible values."""
        rng = np.random.default_rng(2)
        counts = np.bincount([sample_window(100, 50, 15, rng).offset for _ in range(100_000)], minlength=15)
        assert chisquare(counts).pvalue > 0.01

    def test_video_too_short(self) -> None:
        """Test a video shorter than the window raises."""
        with pytest.raises(SplurgeSqcpcValueError) as exc_info:
            sample_window(10, 3, 15, np.random.default_rng(0))
        assert exc_info.value.error_code == "video-too-short"

    def test_label_out_of_range(self) -> None:
        """Test a labeled index beyond the video raises."""
        with pytest.raises(SplurgeSqcpcValueError):
            sample_window(20, 20, 15, np.random.default_rng(0))


class TestSupervisedLoss:
    """Test supervised_loss."""

    def test_single_sample(self) -> None:
        """Test prediction (1, 2) against zeros gives 5."""
        assert supervised_loss(Tensor(np.array([[1.0, 2.0]])), Tensor(np.zeros((1, 2)))).item() == 5.0

    def test_batch_mean(self) -> None:
        """Test the squared norm is averaged over the batch."""
        pred = Tensor(np.array([[1.0, 2.0], [0.0, 0.0]]))
        assert supervised_loss(pred, Tensor(np.zeros((2, 2)))).item() == 2.5

    def test_shape_mismatch(self) -> None:
        """Test differing shapes raise."""
        with pytest.raises(SplurgeSqcpcShapeError):
            supervised_loss(Tensor(np.zeros((2, 2))), Tensor(np.zeros((2, 3))))


class TestFinetuneLoss:
    """Test the truncated BPTT loss."""

    def test_frames_after_offset_ignored(self) -> None:
        """Test perturbing frames after each offset leaves loss and predictions bitwise equal."""
        bundle = ModelBundle.initialize(TINY, 0, np.float64)
        rng = np.random.default_rng(3)
        windows = rng.random((2, 6, 1, 8, 8))
        perturbed = windows.copy()
        perturbed[0, 3:] = rng.random((3, 1, 8, 8))
        perturbed[1, 5:] = rng.random((1, 1, 8, 8))
        labels = rng.uniform(0, 5, (2, 2))
        theta = bundle.tensors()
        a = finetune_loss(Tensor(windows), [2, 4], labels, theta, bundle, bundle.head_state)
        b = finetune_loss(Tensor(perturbed), [2, 4], labels, theta, bundle, bundle.head_state)
        assert a[0].item() == b[0].item()
        np.testing.assert_array_equal(a[1].numpy(), b[1].numpy())

    def test_parameter_gradients_ignore_later_frames(self) -> None:
        """Test 100 random windows: perturbing frames after the offset leaves every gradient bitwise equal."""
        bundle = ModelBundle.initialize(TINY, 8, np.float64)
        rng = np.random.default_rng(8)

        def gradients(windows: np.ndarray, offsets: list[int], labels: np.ndarray) -> dict[str, np.ndarray]:
            theta = bundle.tensors(requires_grad=True)
            loss, _, _ = finetune_loss(Tensor(windows), offsets, labels, theta, bundle, bundle.head_state)
            loss.backward()
            return {name: t.grad for name, t in theta.items() if t.grad is not None}

        for _ in range(100):
            windows = rng.random((2, 5, 1, 8, 8))
            offsets = [int(o) for o in rng.integers(0, 5, size=2)]
            labels = rng.uniform(0, 5, (2, 2))
            perturbed = windows.copy()
            for b, offset in enumerate(offsets):
                perturbed[b, offset + 1 :] = rng.random(perturbed[b, offset + 1 :].shape)
            expected = gradients(windows, offsets, labels)
            actual = gradients(perturbed, offsets, labels)
            assert expected.keys() == actual.keys()
            for name, grad in expected.items():
                assert grad.tobytes() == actual[name].tobytes()

    def test_augmented_frames_after_offset_ignored(self) -> None:
        """Test augmenting whole windows keeps the loss independent of frames after each offset."""
        bundle = ModelBundle.initialize(TINY, 5, np.float64)
        theta = bundle.tensors()
        rng = np.random.default_rng(12)
        params = AugmentParams(brightness=0.3, contrast=0.5)
        transforms = [AugmentTransform(contrast=1.1)]
        transforms.extend(AugmentTransform.sample(params, rng, 8, 8) for _ in range(20))
        for transform in transforms:
            windows = rng.random((2, 6, 1, 8, 8))
            offsets = [int(o) for o in rng.integers(0, 5, size=2)]
            labels = rng.uniform(0, 5, (2, 2))
            perturbed = windows.copy()
            for b, offset in enumerate(offsets):
                perturbed[b, offset + 1 :] = rng.random(perturbed[b, offset + 1 :].shape)

            losses = []
            for batch in (windows, perturbed):
                augmented = Tensor(np.stack([apply_augmentation(window, transform) for window in batch]))
                loss, _, _ = finetune_loss(augmented, offsets, labels, theta, bundle, bundle.head_state, "eval")
                losses.append(loss.data.tobytes())
            assert losses[0] == losses[1]

    def test_gradient_reaches_first_frame(self) -> None:
        """Test the error at offset 3 backpropagates to frame 0 and not past the offset."""
        bundle = ModelBundle.initialize(TINY, 1, np.float64)
        windows = Tensor(np.random.default_rng(4).random((1, 5, 1, 8, 8)), requires_grad=True)
        loss, _, _ = finetune_loss(windows, [3], np.ones((1, 2)), bundle.tensors(), bundle, bundle.head_state, "eval")
        loss.backward()
        assert windows.grad is not None
        assert np.any(windows.grad[0, 0] != 0)
        np.testing.assert_array_equal(windows.grad[0, 4], 0.0)

    def test_parameter_gradient(self) -> None:
        """Test the BPTT gradient of a GRU weight against finite differences."""
        bundle = ModelBundle.initialize(TINY, 2, np.float64)
        theta = bundle.tensors()
        windows = Tensor(np.random.default_rng(5).random((2, 4, 1, 8, 8)))
        labels = np.full((2, 2), 2.0)

        def loss_of(weight: Tensor) -> Tensor:
            params = {**theta, "gru.r.weight": weight}
            return finetune_loss(windows, [1, 3], labels, params, bundle, bundle.head_state, "eval")[0]

        assert grad_check(loss_of, theta["gru.r.weight"].data) < 1e-4

    def test_offset_out_of_range(self) -> None:
        """Test an offset past the window raises."""
        bundle = ModelBundle.initialize(TINY, 0, np.float64)
        with pytest.raises(SplurgeSqcpcValueError):
            finetune_loss(
                Tensor(np.zeros((1, 3, 1, 8, 8))), [3], np.zeros((1, 2)), bundle.tensors(), bundle, bundle.head_state
            )

    def test_non_temporal_hidden(self) -> None:
        """Test without the GRU the hidden state is the offset frame's feature grid."""
        bundle = ModelBundle.initialize(FLAT, 0, np.float64)
        frames = Tensor(np.random.default_rng(6).random((4, 1, 8, 8)))
        theta = bundle.tensors()
        expected = feature_extract(Tensor(frames.numpy()[2:3]), theta, FLAT).numpy()
        np.testing.assert_array_equal(hidden_at(frames, 2, theta, bundle).numpy(), expected)


class TestFinetuneStep:
    """Test one supervised update."""

    def test_updates_parameters_and_statistics(self) -> None:
        """Test a step moves parameters, counts the step and updates the head statistics."""
        bundle = ModelBundle.initialize(TINY, 0)
        before = bundle.copy()
        rng = np.random.default_rng(7)
        windows = rng.random((2, 4, 1, 8, 8)).astype(np.float32)
        loss, adam = finetune_step(
            bundle, AdamState.zeros(bundle.params), windows, [1, 3], rng.uniform(0, 5, (2, 2)), _finetune_config()
        )
        assert loss > 0.0
        assert adam.step == 1
        assert not np.array_equal(bundle.params["head.fc.bias"], before.params["head.fc.bias"])
        assert not np.array_equal(bundle.buffers["head.bn.running_mean"], before.buffers["head.bn.running_mean"])


class TestTrainFinetune:
    """Test the fine-tuning loop."""

    def test_step_count(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test 2 labeled frames for 2 epochs at batch 1 take 4 steps."""
        assert dataset.sparse is not None
        result = train_finetune(dataset, dataset.sparse, _finetune_config(), ModelBundle.initialize(TINY, 0), temp_dir)
        assert result.adam.step == 4
        assert [record.epoch for record in result.history] == [1, 2]
        assert result.best_checkpoint.exists() and result.last_checkpoint.exists()
        lines = result.log_path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[0].split("\t")[:3] == ["1", "train", "sup_loss"]

    def test_log_is_deterministic(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test equal seeds and inputs write identical metric logs."""
        assert dataset.sparse is not None
        bundle = ModelBundle.initialize(TINY, 0)
        first = train_finetune(dataset, dataset.sparse, _finetune_config(), bundle.copy(), temp_dir / "a")
        second = train_finetune(dataset, dataset.sparse, _finetune_config(), bundle.copy(), temp_dir / "b")
        assert first.log_path.read_bytes() == second.log_path.read_bytes()
        assert first.last_checkpoint.read_bytes() == second.last_checkpoint.read_bytes()

    def test_short_video_is_padded(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test a window longer than the video is filled by repeating the first frame."""
        labels = LabelTable.from_rows([("vid000", 2, [1.0, 1.0]), ("vid001", 0, [2.0, 2.0])], 2)
        result = train_finetune(
            dataset, labels, _finetune_config(seq_len=25, epochs=1), ModelBundle.initialize(TINY, 0), temp_dir
        )
        assert result.adam.step == 2

    def test_non_temporal(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test the frame-only network fine-tunes on single frames."""
        assert dataset.sparse is not None
        result = train_finetune(
            dataset, dataset.sparse, _finetune_config(batch_size=2, epochs=1), ModelBundle.initialize(FLAT, 0), temp_dir
        )
        assert result.adam.step == 1

    def test_augmented_run(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test fine-tuning with augmentation runs and is reproducible."""
        assert dataset.sparse is not None
        config = _finetune_config(augment=True)
        bundle = ModelBundle.initialize(TINY, 0)
        first = train_finetune(dataset, dataset.sparse, config, bundle.copy(), temp_dir / "a")
        second = train_finetune(dataset, dataset.sparse, config, bundle.copy(), temp_dir / "b")
        assert first.adam.step == 4
        assert first.log_path.read_bytes() == second.log_path.read_bytes()

    def test_empty_labels(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test an empty label table raises."""
        empty = LabelTable.from_rows([], 2)
        with pytest.raises(SplurgeSqcpcDataError):
            train_finetune(dataset, empty, _finetune_config(), ModelBundle.initialize(TINY, 0), temp_dir)

    def test_intensity_mismatch(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test labels with the wrong number of intensities raise."""
        labels = LabelTable.from_rows([("vid000", 0, [1.0, 1.0, 1.0])], 3)
        with pytest.raises(SplurgeSqcpcConfigError):
            train_finetune(dataset, labels, _finetune_config(), ModelBundle.initialize(TINY, 0), temp_dir)


class TestTrainPretext:
    """Test the pretext loop."""

    def test_one_epoch(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test one epoch writes checkpoints and a metrics line with Top-1/3/5."""
        result = train_pretext(dataset, _pretext_config(), ModelBundle.initialize(TINY, 0), temp_dir)
        assert result.adam.step == 5
        record = result.history[0]
        assert record.value("train", "nce_loss") > 0.0
        for n in (1, 3, 5):
            assert 0.0 <= record.value("val", f"top{n}") <= 1.0
        _, adam, epoch = ModelBundle.load(result.last_checkpoint, TINY)
        assert epoch == 1
        assert adam is not None and adam.step == 5

    def test_resume_appends(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test resuming continues the epoch count and appends to the log."""
        bundle = ModelBundle.initialize(TINY, 0)
        first = train_pretext(dataset, _pretext_config(), bundle, temp_dir)
        second = train_pretext(dataset, _pretext_config(), bundle, temp_dir, adam=first.adam, start_epoch=1)
        assert second.history[0].epoch == 2
        assert second.adam.step == 10
        lines = second.log_path.read_text(encoding="utf-8").splitlines()
        assert [line.split("\t")[0] for line in lines] == ["1", "2"]

    def test_resume_from_checkpoint_continues_adam_step(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test resuming from the last checkpoint continues the optimizer step counter."""
        first = train_pretext(dataset, _pretext_config(), ModelBundle.initialize(TINY, 0), temp_dir)
        bundle, adam, epoch = ModelBundle.load(first.last_checkpoint, TINY)
        assert adam is not None and adam.step == 5
        second = train_pretext(dataset, _pretext_config(), bundle, temp_dir, adam=adam, start_epoch=epoch)
        assert second.adam.step == 10
        _, saved, saved_epoch = ModelBundle.load(second.last_checkpoint, TINY)
        assert saved is not None and (saved.step, saved_epoch) == (10, 2)

    def test_resume_keeps_better_best(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test a resumed epoch does not replace a best checkpoint with a higher logged Top-1."""
        first = train_pretext(dataset, _pretext_config(), ModelBundle.initialize(TINY, 0), temp_dir)
        record = first.history[0]
        strong = EpochRecord(
            record.epoch,
            tuple((s, m, 1.0 if (s, m) == ("val", "top1") else v) for s, m, v in record.groups),
        )
        first.log_path.write_text(strong.to_line() + "\n", encoding="utf-8")
        best_bytes = first.best_checkpoint.read_bytes()
        bundle, adam, epoch = ModelBundle.load(first.last_checkpoint, TINY)
        second = train_pretext(dataset, _pretext_config(), bundle, temp_dir, adam=adam, start_epoch=epoch)
        assert second.best_epoch == 1
        assert second.best_checkpoint.read_bytes() == best_bytes
        assert second.history[0].value("val", "top1") <= 1.0

    def test_fresh_run_in_used_directory(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test a run from epoch 0 ignores an earlier log and writes its own best checkpoint."""
        train_pretext(dataset, _pretext_config(), ModelBundle.initialize(TINY, 0), temp_dir)
        again = train_pretext(dataset, _pretext_config(), ModelBundle.initialize(TINY, 1), temp_dir)
        assert again.best_epoch == 1
        assert len(again.log_path.read_text(encoding="utf-8").splitlines()) == 1

    def test_deterministic(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test two runs from the same seed write identical logs and checkpoints."""
        config = _pretext_config(augment=True)
        a = train_pretext(dataset, config, ModelBundle.initialize(TINY, 0), temp_dir / "a")
        b = train_pretext(dataset, config, ModelBundle.initialize(TINY, 0), temp_dir / "b")
        assert a.log_path.read_bytes() == b.log_path.read_bytes()
        assert a.best_checkpoint.read_bytes() == b.best_checkpoint.read_bytes()

    def test_needs_temporal_model(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test the frame-only network cannot be pretrained."""
        with pytest.raises(SplurgeSqcpcConfigError) as exc_info:
            train_pretext(dataset, _pretext_config(), ModelBundle.initialize(FLAT, 0), temp_dir)
        assert exc_info.value.error_code == "pretext-needs-temporal"

    def test_videos_too_short(self, dataset: Dataset, temp_dir: Path) -> None:
        """Test no window fitting in any training video raises."""
        with pytest.raises(SplurgeSqcpcDataError):
            train_pretext(
                dataset, _pretext_config(seq_len=8, frame_stride=3), ModelBundle.initialize(TINY, 0), temp_dir
            )


class TestEpochRecord:
    """Test metrics log lines."""

    def test_from_line(self) -> None:
        """Test a log line parses back into the record that wrote it."""
        record = EpochRecord(3, (("train", "nce_loss", 2.5), ("val", "top1", 0.125)))
        assert EpochRecord.from_line(record.to_line()) == record

    @pytest.mark.parametrize("line", ["", "1\ttrain\tnce_loss", "1\ttrain\tnce_loss\tx", "one\ttrain\tnce_loss\t1.0"])
    def test_malformed_line(self, line: str) -> None:
        """Test a malformed log line is a data error."""
        with pytest.raises(SplurgeSqcpcDataError):
            EpochRecord.from_line(line)


class TestEvaluate:
    """Test evaluation and reports."""

    def test_perfect_predictions(self, dataset: Dataset) -> None:
        """Test labels equal to the model's own predictions give ICC 1 and MAE 0."""
        bundle = ModelBundle.initialize(TINY, 0)
        bundle.params["head.fc.weight"] = bundle.params["head.fc.weight"] * np.float32(0.01)
        bundle.params["head.fc.bias"] = np.full_like(bundle.params["head.fc.bias"], 2.5)
        rows = []
        for vid in ("vid000", "vid002"):
            pred = predict_frames(bundle, dataset.videos[vid].frames, [1, 3, 5])
            rows.extend((vid, t, pred[i]) for i, t in enumerate((1, 3, 5)))
        report = evaluate(bundle, dataset, LabelTable.from_rows(rows, 2))
        assert [row.name for row in report.rows] == ["au_0", "au_1"]
        assert all(row.icc == 1.0 and row.mae == 0.0 for row in report.rows)
        assert report.mean_icc == 1.0

    def test_prediction_is_causal(self, dataset: Dataset) -> None:
        """Test a frame's prediction does not depend on later frames."""
        bundle = ModelBundle.initialize(TINY, 1)
        frames = dataset.videos["vid000"].frames
        changed = frames.copy()
        changed[6:] = 0.0
        np.testing.assert_array_equal(predict_frames(bundle, frames, [5]), predict_frames(bundle, changed, [5]))

    def test_empty_labels(self, dataset: Dataset) -> None:
        """Test evaluating on no labels raises."""
        with pytest.raises(SplurgeSqcpcDataError):
            evaluate(ModelBundle.initialize(TINY, 0), dataset, LabelTable.from_rows([], 2))

    def test_report_formats(self, temp_dir: Path) -> None:
        """Test TSV and aligned text renderings."""
        report = EvaluationReport((DimensionMetrics("au_0", 0.5, 0.25), DimensionMetrics("au_1", 0.25, 0.75)))
        assert report.mean_icc == 0.375
        assert report.mean_mae == 0.5
        assert report.tsv_lines() == ["dimension\ticc\tmae", "au_0\t0.5\t0.25", "au_1\t0.25\t0.75", "avg\t0.375\t0.5"]
        assert report.text_lines() == [
            "dimension     icc     mae",
            "au_0       0.5000  0.2500",
            "au_1       0.2500  0.7500",
            "avg        0.3750  0.5000",
        ]
        tsv, txt = write_report(temp_dir, report, "report.tsv", "report.txt")
        assert tsv.read_text(encoding="utf-8").splitlines() == report.tsv_lines()
        assert txt.read_text(encoding="utf-8").splitlines() == report.text_lines()
