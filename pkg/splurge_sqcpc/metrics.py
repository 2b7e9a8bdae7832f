"""Agreement metrics between ground-truth and predicted intensity series.

``icc31`` follows the agreement formula used for AU-intensity benchmarks::

    y_hat = (1 / 2N) * sum(y + y_pred)
    W     = (1 / N) * sum((y - y_hat)^2 + (y_pred - y_hat)^2)
    S     = sum((y - y_pred)^2)
    ICC   = (W - S) / (W + S)

S carries no 1/N factor. The 0/0 case (both series constant and equal)
returns 0 with ``degenerate`` set instead of NaN, so averages over
dimensions stay finite.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import SplurgeSqcpcShapeError, SplurgeSqcpcValueError


@dataclass(frozen=True)
class PairedSeries:
    """Ground truth ``y`` and predictions ``y_pred`` of one intensity dimension."""

    y: np.ndarray
    y_pred: np.ndarray

    @classmethod
    def of(cls, y: Sequence[float] | np.ndarray, y_pred: Sequence[float] | np.ndarray) -> PairedSeries:
        truth = np.asarray(y, dtype=np.float64).reshape(-1)
        pred = np.asarray(y_pred, dtype=np.float64).reshape(-1)
        if truth.shape != pred.shape:
            raise SplurgeSqcpcShapeError(
                message=f"paired series lengths differ: {truth.size} vs {pred.size}",
                error_code="length-mismatch",
            )
        return cls(truth, pred)

    def __len__(self) -> int:
        return int(self.y.size)


@dataclass(frozen=True)
class IccResult:
    value: float
    degenerate: bool = False


def icc31(series: PairedSeries) -> IccResult:
    """Intra-class correlation of two series.

    Raises:
        SplurgeSqcpcValueError: If the series has fewer than two samples.
    """
    n = len(series)
    if n < 2:
        raise SplurgeSqcpcValueError(
            message=f"icc31 needs at least 2 samples, got {n}",
            error_code="too-few-samples",
        )
    y, y_pred = series.y, series.y_pred
    grand_mean = (y.sum() + y_pred.sum()) / (2 * n)
    within = (((y - grand_mean) ** 2).sum() + ((y_pred - grand_mean) ** 2).sum()) / n
    residual = ((y - y_pred) ** 2).sum()
    total = within + residual
    if total == 0.0:
        return IccResult(0.0, degenerate=True)
    return IccResult(float((within - residual) / total))


def mae(series: PairedSeries) -> float:
    """Mean absolute error.

    Raises:
        SplurgeSqcpcValueError: If the series is empty.
    """
    if len(series) == 0:
        raise SplurgeSqcpcValueError(message="mae of an empty series", error_code="empty-series")
    return float(np.abs(series.y - series.y_pred).mean())
