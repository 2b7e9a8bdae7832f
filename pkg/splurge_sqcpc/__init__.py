"""splurge-sqcpc: contrastive video pretraining for per-frame intensity regression.

A numpy implementation of a convolutional extractor, a ConvGRU temporal model
and a predictive head trained with a dense contrastive (NCE) pretext task,
followed by semi-supervised fine-tuning of an intensity regressor from sparse
frame labels and ICC/MAE evaluation. Includes a synthetic blob-video oracle
dataset so every stage runs without external data.
"""

from .cli import main as cli_main
from .config import RunConfig, load_config
from .cpc import nce_loss, pretext_loss, rollout, top_n_accuracy
from .data import Dataset, LabelTable, PackedVideo, load_packed, write_packed
from .exceptions import (
    SplurgeSqcpcConfigError,
    SplurgeSqcpcDataError,
    SplurgeSqcpcError,
    SplurgeSqcpcNumericError,
    SplurgeSqcpcOSError,
    SplurgeSqcpcRuntimeError,
    SplurgeSqcpcShapeError,
    SplurgeSqcpcTypeError,
    SplurgeSqcpcValueError,
)
from .main import main
from .metrics import icc31, mae
from .model import ModelBundle, NetworkConfig
from .semisup import TrainConfig, evaluate, sample_window, train_finetune, train_pretext
from .synth import SynthSpec, synth_generate

__version__ = "2025.1.0"

__all__ = [
    "__version__",
    "cli_main",
    "main",
    "Dataset",
    "LabelTable",
    "ModelBundle",
    "NetworkConfig",
    "PackedVideo",
    "RunConfig",
    "SynthSpec",
    "TrainConfig",
    "evaluate",
    "icc31",
    "load_config",
    "load_packed",
    "mae",
    "nce_loss",
    "pretext_loss",
    "rollout",
    "sample_window",
    "synth_generate",
    "top_n_accuracy",
    "train_finetune",
    "train_pretext",
    "write_packed",
    "SplurgeSqcpcError",
    "SplurgeSqcpcConfigError",
    "SplurgeSqcpcDataError",
    "SplurgeSqcpcNumericError",
    "SplurgeSqcpcOSError",
    "SplurgeSqcpcRuntimeError",
    "SplurgeSqcpcShapeError",
    "SplurgeSqcpcTypeError",
    "SplurgeSqcpcValueError",
]
