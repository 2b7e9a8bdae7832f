"""
Constants for splurge-sqcpc file formats and numeric defaults.

Copyright (c) 2025 Jim Schilling
License: MIT
"""

# Packed frame file: magic, then u32 T, C, H, W, then float32 payload
PACKED_MAGIC = b"SQF1"
PACKED_HEADER_SIZE = 4 + 4 * 4

# Checkpoint file: magic, u32 version, u32 manifest length, manifest, payloads
CHECKPOINT_MAGIC = b"SQCK"
CHECKPOINT_VERSION = 1

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1
ADAM_EPSILON = 1e-8

INTENSITY_MIN = 0.0
INTENSITY_MAX = 5.0

THREADS_ENV_VAR = "SQCPC_THREADS"

MANIFEST_FILE = "manifest.txt"
SPLIT_FILE = "split.txt"
DENSE_LABELS_FILE = "labels_dense.csv"
SPARSE_LABELS_FILE = "labels_sparse.csv"
VIDEO_DIR = "videos"
VIDEO_SUFFIX = ".sqf"
RESOLVED_CONFIG_FILE = "resolved_config.txt"

PRETEXT_BEST = "pretext_best.sqck"
PRETEXT_LAST = "pretext_last.sqck"
PRETEXT_LOG = "pretext_metrics.tsv"
FINETUNE_BEST = "finetune_best.sqck"
FINETUNE_LAST = "finetune_last.sqck"
FINETUNE_LOG = "finetune_metrics.tsv"
REPORT_TSV = "report.tsv"
REPORT_TXT = "report.txt"

TOP_N = (1, 3, 5)
