"""CLI interface for splurge-sqcpc.

Provides command-line argument parsing and entry point for the application.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence


def main(argv: Sequence[str] | None = None) -> int:
    """Parse CLI arguments and invoke the requested pipeline stage.

    Returns:
        Exit code: 0 (success), 2 (usage/config), 3 (data), 4 (numeric), 1 (unexpected)
    """
    from .main import main as main_func

    parser = _create_parser()
    args = parser.parse_args(argv)

    return main_func(
        command=args.command,
        config_path=args.config,
        overrides=args.overrides,
        out=args.out,
        seed=args.seed,
        verbose=args.verbose,
    )


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="Config file of 'key = value' lines ('#' starts a comment)",
        metavar="PATH",
    )

    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        help="Override one config key (repeatable), e.g. --set pretext_epochs=5",
        metavar="KEY=VALUE",
    )

    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="Output directory (default: data_dir for synth, ./runs otherwise)",
        metavar="DIR",
    )

    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Run seed; takes precedence over the config file and --set",
        metavar="SEED",
    )

    parser.add_argument(
        "--verbose",
        "-v",
        action="store_true",
        help="Enable verbose output",
    )


def _create_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser.

    Returns:
        Configured ArgumentParser instance
    """
    from . import __version__

    parser = argparse.ArgumentParser(
        prog="splurge-sqcpc",
        description="Contrastive pretraining and semi-supervised fine-tuning of per-frame intensity regressors",
        epilog="Environment: SQCPC_THREADS caps worker threads for dataset generation (0 = one per CPU).",
    )

    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "synth": "Generate a synthetic dataset with dense and sparse labels",
        "pretrain": "Contrastive pretext training on unlabeled windows",
        "finetune": "Supervised fine-tuning on sparse labels (init = scratch or a checkpoint)",
        "eval": "Write per-dimension ICC/MAE reports for a checkpoint",
    }
    for name, help_text in helps.items():
        _add_run_arguments(commands.add_parser(name, help=help_text, description=help_text))

    return parser


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
