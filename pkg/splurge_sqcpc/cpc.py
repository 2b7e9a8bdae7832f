"""Contrastive predictive pretext: context encoding, rollout, dense NCE loss, Top-n.

A window of T frames is split into C context frames and P = T - C prediction
steps. The GRU summarizes the context; the predictive head then rolls out P
future feature grids, each prediction being fed back as the next GRU input.
Every (batch item, step, row, col) prediction is scored by a raw dot product
against every target vector in the batch, giving a K x K score matrix with
K = B * P * Hf * Wf whose diagonal holds the positive pairs.

DOMAINS: ['cpc', 'contrastive', 'nce']
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .diffcore import (
    Tensor,
    diagonal_cross_entropy,
    matmul,
    reshape,
    stack,
    take_rows,
    transpose,
)
from .exceptions import SplurgeSqcpcShapeError, SplurgeSqcpcValueError
from .model import GruState, NetworkConfig, conv_gru_step, feature_extract, predictive_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PretextBatch:
    """Frames [B, T, C, H, W] split into ``context_len`` context frames and T - context_len targets."""

    frames: Tensor
    context_len: int

    def __post_init__(self) -> None:
        if self.frames.ndim != 5:
            raise SplurgeSqcpcShapeError(
                message=f"pretext frames must be [B, T, C, H, W], got {self.frames.shape}",
                error_code="dimension-mismatch",
            )
        if self.seq_len < 2 or not 1 <= self.context_len < self.seq_len:
            raise SplurgeSqcpcValueError(
                message=f"need T >= 2 and 1 <= context_len < T, got T={self.seq_len}, context_len={self.context_len}",
                error_code="degenerate-split",
            )

    @classmethod
    def of(cls, frames: np.ndarray, context_len: int) -> PretextBatch:
        return cls(Tensor(frames), context_len)

    @property
    def batch_size(self) -> int:
        return self.frames.shape[0]

    @property
    def seq_len(self) -> int:
        return self.frames.shape[1]

    @property
    def pred_steps(self) -> int:
        return self.seq_len - self.context_len


@dataclass(frozen=True)
class ContextEncoding:
    """Hidden state after the context frames and the target grids of the following frames."""

    state: GruState
    targets: list[Tensor]


def _per_step(grids: Tensor) -> list[Tensor]:
    """Split [B, T, ...] into T tensors of shape [B, ...]."""
    leading = transpose(grids, (1, 0, *range(2, grids.ndim)))
    return [reshape(take_rows(leading, t, t + 1), leading.shape[1:]) for t in range(leading.shape[0])]


def encode_context(batch: PretextBatch, theta: Mapping[str, Tensor], config: NetworkConfig) -> ContextEncoding:
    """Run the extractor on every frame and the GRU over the first ``context_len`` of them."""
    b, t = batch.batch_size, batch.seq_len
    flat = reshape(batch.frames, (b * t, *batch.frames.shape[2:]))
    grids = feature_extract(flat, theta, config)
    per_step = _per_step(reshape(grids, (b, t, *config.feature_shape)))
    state = GruState.zeros(b, config, batch.frames.dtype)
    for x in per_step[: batch.context_len]:
        state = conv_gru_step(x, state, theta)
    return ContextEncoding(state, per_step[batch.context_len :])


def rollout(h_context: GruState, steps: int, theta: Mapping[str, Tensor]) -> list[Tensor]:
    """Predict ``steps`` future grids, feeding each prediction back into the GRU."""
    if steps < 1:
        raise SplurgeSqcpcValueError(
            message=f"rollout needs at least one step, got {steps}",
            error_code="invalid-steps",
        )
    state = h_context
    predictions = [predictive_step(state, theta)]
    for _ in range(steps - 1):
        state = conv_gru_step(predictions[-1], state, theta)
        predictions.append(predictive_step(state, theta))
    return predictions


def _flatten_vectors(grids: Sequence[Tensor] | Tensor) -> Tensor:
    """[B, P, Cf, Hf, Wf] (or P grids [B, Cf, Hf, Wf]) -> [K, Cf] in (b, k, i, j) order."""
    stacked = grids if isinstance(grids, Tensor) else stack(list(grids), axis=1)
    if stacked.ndim != 5:
        raise SplurgeSqcpcShapeError(
            message=f"expected grids [B, P, Cf, Hf, Wf], got {stacked.shape}",
            error_code="dimension-mismatch",
        )
    b, p, cf, hf, wf = stacked.shape
    return reshape(transpose(stacked, (0, 1, 3, 4, 2)), (b * p * hf * wf, cf))


def nce_loss(predictions: Sequence[Tensor] | Tensor, targets: Sequence[Tensor] | Tensor) -> tuple[Tensor, Tensor]:
    """Dense InfoNCE over all B * P * Hf * Wf prediction vectors.

    Returns:
        The mean over rows of the cross-entropy whose positive is the diagonal,
        and the K x K score matrix.

    Raises:
        SplurgeSqcpcShapeError: If the shapes differ or K is 0.
        SplurgeSqcpcNumericError: If any score is not finite.
    """
    pred = _flatten_vectors(predictions)
    target = _flatten_vectors(targets)
    if pred.shape != target.shape:
        raise SplurgeSqcpcShapeError(
            message=f"predictions {pred.shape} and targets {target.shape} differ",
            error_code="dimension-mismatch",
        )
    if pred.shape[0] == 0:
        raise SplurgeSqcpcShapeError(message="nce_loss with K = 0 candidates", error_code="empty")
    scores = matmul(pred, transpose(target, (1, 0)))
    return diagonal_cross_entropy(scores), scores


def pretext_loss(batch: PretextBatch, theta: Mapping[str, Tensor], config: NetworkConfig) -> tuple[Tensor, Tensor]:
    """frames -> extractor -> GRU -> rollout -> nce_loss."""
    encoding = encode_context(batch, theta, config)
    predictions = rollout(encoding.state, batch.pred_steps, theta)
    return nce_loss(predictions, encoding.targets)


def top_n_accuracy(scores: Tensor | np.ndarray, n: int) -> float:
    """Fraction of rows whose diagonal entry ranks within the top ``n``.

    Ranking is by score descending, then column ascending, so a diagonal tied
    with an earlier column ranks below it.
    """
    values = scores.data if isinstance(scores, Tensor) else np.asarray(scores)
    k = values.shape[0]
    if values.ndim != 2 or values.shape[1] != k:
        raise SplurgeSqcpcShapeError(
            message=f"scores must be square, got {values.shape}",
            error_code="dimension-mismatch",
        )
    if not 1 <= n <= k:
        raise SplurgeSqcpcValueError(message=f"n must be in [1, {k}], got {n}", error_code="invalid-n")
    diagonal = np.diag(values)[:, None]
    columns = np.arange(k)
    ahead = (values > diagonal) | ((values == diagonal) & (columns[None, :] < columns[:, None]))
    rank = ahead.sum(axis=1)
    return float((rank < n).mean())
