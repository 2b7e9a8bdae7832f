"""Main entry point wrapper for splurge-sqcpc.

Bridges parsed CLI arguments to the four pipeline stages (synth, pretrain,
finetune, eval) with logging set-up, error reporting and exit codes.
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .checkpoint import read_checkpoint
from .config import RunConfig, load_config, write_resolved
from .constants import FINETUNE_BEST, REPORT_TSV, REPORT_TXT, RESOLVED_CONFIG_FILE
from .data import Dataset, LabelTable, select_labeled_frames, split_videos, write_dataset
from .exceptions import (
    SplurgeSqcpcDataError,
    SplurgeSqcpcError,
    SplurgeSqcpcNumericError,
    SplurgeSqcpcOSError,
    SplurgeSqcpcTypeError,
    SplurgeSqcpcValueError,
)
from .model import ModelBundle
from .semisup import evaluate, train_finetune, train_pretext, write_report
from .synth import synth_generate

logger = logging.getLogger(__name__)

COMMANDS = ("synth", "pretrain", "finetune", "eval")
PRETRAINED_GROUPS = ("extractor", "gru", "predictor")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def main(
    command: str,
    config_path: str | Path | None = None,
    overrides: Sequence[str] = (),
    out: str | Path | None = None,
    seed: int | None = None,
    verbose: bool = False,
) -> int:
    """Run one pipeline stage.

    Args:
        command: One of ``synth``, ``pretrain``, ``finetune``, ``eval``
        config_path: Optional ``key = value`` config file
        overrides: ``key=value`` strings applied after the file
        out: Output directory (``data_dir`` for synth, ``runs`` otherwise)
        seed: Overrides the ``seed`` key
        verbose: Enable debug logging

    Returns:
        Exit code: 0 (success), 2 (usage/config), 3 (data), 4 (numeric), 1 (unexpected)
    """
    log_level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=log_level,
        format="%(levelname)s: %(message)s",
    )

    if command not in COMMANDS:
        print(f"Error: unknown command {command!r}; expected one of {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE

    try:
        config = load_config(config_path, overrides, seed)
        if command == "synth":
            cmd_synth(config, Path(out) if out is not None else Path(config.data_dir))
        else:
            runner = {"pretrain": cmd_pretrain, "finetune": cmd_finetune, "eval": cmd_eval}[command]
            runner(config, Path(out) if out is not None else Path("runs"))
        return EXIT_OK

    except SplurgeSqcpcError as e:
        error_msg = _format_error(e)
        print(error_msg, file=sys.stderr)
        logger.error(f"{command} failed: {error_msg}")
        return _exit_code(e)

    except KeyboardInterrupt:
        print(f"\n{command} cancelled by user", file=sys.stderr)
        return EXIT_UNEXPECTED

    except Exception as e:
        error_msg = f"Unexpected error: {str(e)}"
        print(error_msg, file=sys.stderr)
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return EXIT_UNEXPECTED


def _exit_code(error: SplurgeSqcpcError) -> int:
    # DataError subclasses ValueError, so it is matched first
    if isinstance(error, SplurgeSqcpcDataError):
        return EXIT_DATA
    if isinstance(error, SplurgeSqcpcNumericError):
        return EXIT_NUMERIC
    if isinstance(error, SplurgeSqcpcTypeError | SplurgeSqcpcValueError | SplurgeSqcpcOSError):
        return EXIT_USAGE
    return EXIT_UNEXPECTED


def _format_error(error: SplurgeSqcpcError) -> str:
    """Format an error for display."""
    error_type = type(error).__name__
    error_code = getattr(error, "error_code", "unknown")
    message = str(error)

    return f"{error_type} ({error_code}): {message}"


def cmd_synth(config: RunConfig, out: Path) -> Path:
    """Generate the synthetic dataset directory, sparse labels drawn from training videos only."""
    result = synth_generate(config.synth())
    train_ids, val_ids = split_videos([video.video_id for video in result.videos], config.val_fraction, config.seed)
    lengths = {video.video_id: video.num_frames for video in result.videos if video.video_id in set(train_ids)}
    keys = select_labeled_frames(lengths, config.label_fraction, np.random.default_rng(config.seed))
    sparse = result.dense.select(keys)
    write_dataset(out, result.videos, result.dense, sparse, train_ids, val_ids)
    write_resolved(out, config)
    print(f"Dataset: {out}")
    print(f"Videos: {len(result.videos)} ({len(train_ids)} train, {len(val_ids)} val)")
    print(f"Labeled frames: {len(sparse)} of {len(result.dense)}")
    return out


def cmd_pretrain(config: RunConfig, out: Path) -> Path:
    """Pretext training; ``resume=<ckpt>`` continues the optimizer step and epoch counters."""
    dataset = Dataset.load(config.data_dir, dense=False, sparse=False)
    network = config.network()
    if config.resume:
        bundle, adam, start_epoch = ModelBundle.load(config.resume, network)
        logger.info(f"Resuming from {config.resume} at epoch {start_epoch}")
    else:
        bundle, adam, start_epoch = ModelBundle.initialize(network, config.seed), None, 0
    write_resolved(out, config)
    result = train_pretext(dataset, config.train("pretext"), bundle, out, adam=adam, start_epoch=start_epoch)
    print(f"Best checkpoint: {result.best_checkpoint} (epoch {result.best_epoch})")
    print(f"Metrics log: {result.log_path}")
    return result.best_checkpoint


def _loaded(table: LabelTable | None, name: str) -> LabelTable:
    if table is None:
        raise SplurgeSqcpcDataError(
            message=f"dataset was loaded without its {name} labels",
            error_code="missing-labels",
        )
    return table


def _finetune_labels(config: RunConfig, dataset: Dataset) -> LabelTable:
    """The dataset's sparse labels, or a fresh selection when ``label_fraction`` differs from the dataset's."""
    dense, sparse = _loaded(dataset.dense, "dense"), _loaded(dataset.sparse, "sparse")
    recorded = Path(config.data_dir) / RESOLVED_CONFIG_FILE
    if not recorded.is_file():
        return sparse
    if load_config(recorded).label_fraction == config.label_fraction:
        return sparse
    lengths = {vid: dataset.lengths[vid] for vid in dataset.train_ids}
    keys = select_labeled_frames(lengths, config.label_fraction, np.random.default_rng(config.seed))
    logger.info(f"Re-selected {len(keys)} labeled frames for label_fraction {config.label_fraction}")
    return dense.select(keys)


def _eval_labels(dataset: Dataset) -> LabelTable:
    dense = _loaded(dataset.dense, "dense")
    if dataset.val_ids:
        return dense.restrict(dataset.val_ids)
    logger.warning("Dataset has no validation videos; evaluating on all dense labels")
    return dense


def cmd_finetune(config: RunConfig, out: Path) -> Path:
    """Fine-tuning from scratch (``init = scratch``) or from a pretext checkpoint (``init = <ckpt>``)."""
    dataset = Dataset.load(config.data_dir)
    train_config = config.train("finetune")
    bundle = ModelBundle.initialize(config.network(), config.seed)
    if train_config.init != "scratch":
        checkpoint = read_checkpoint(train_config.init)
        bundle.load_groups(checkpoint, PRETRAINED_GROUPS, include_buffers=True, path=train_config.init)
        logger.info(f"Initialized extractor, GRU and predictor from {train_config.init}")
    write_resolved(out, config)
    result = train_finetune(
        dataset,
        _finetune_labels(config, dataset),
        train_config,
        bundle,
        out,
        eval_labels=_eval_labels(dataset),
    )
    print(f"Best checkpoint: {result.best_checkpoint} (epoch {result.best_epoch})")
    print(f"Metrics log: {result.log_path}")
    return result.best_checkpoint


def cmd_eval(config: RunConfig, out: Path) -> Path:
    """Per-dimension ICC/MAE of a checkpoint on the validation videos' dense labels."""
    checkpoint = Path(config.checkpoint) if config.checkpoint else out / FINETUNE_BEST
    dataset = Dataset.load(config.data_dir, sparse=False)
    bundle, _, _ = ModelBundle.load(checkpoint, config.network())
    report = evaluate(bundle, dataset, _eval_labels(dataset))
    write_resolved(out, config)
    tsv_path, _ = write_report(out, report, REPORT_TSV, REPORT_TXT)
    for line in report.text_lines():
        print(line)
    return tsv_path

