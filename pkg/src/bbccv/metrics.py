"""Performance metrics with a uniform lower-is-better view.

Four metrics are supported: 0-1 loss and squared error (defined per sample),
and AUC and the concordance index (defined only on vectors of at least two
predictions). Gain metrics are turned into losses by :func:`as_loss` so every
selection routine in the package can simply take an argmin.

Pooled AUC assumes the scores of different fold models live on a common
scale; nothing here rescales them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateMetricError

__all__ = [
    "METRIC_KINDS",
    "MetricSpec",
    "as_loss",
    "auc",
    "auc_columns",
    "concordance_index",
    "get_metric",
    "squared_error",
    "zero_one_loss",
]

METRIC_KINDS = ("zero-one", "squared-error", "auc", "c-index")

_GAIN_KINDS = frozenset({"auc", "c-index"})

# What a trained model must output for each metric.
_PREDICTION_KIND = {
    "zero-one": "label",
    "squared-error": "value",
    "auc": "score",
    "c-index": "risk",
}


def _paired(y, yhat):
    y = np.asarray(y)
    yhat = np.asarray(yhat)
    if y.shape[0] == 0:
        raise ValueError("empty input")
    if y.shape[0] != yhat.shape[0]:
        raise ValueError(f"length mismatch: {y.shape[0]} labels vs {yhat.shape[0]} predictions")
    return y, yhat


def zero_one_loss(y, yhat) -> float:
    """Fraction of positions where the prediction differs from the label."""
    y, yhat = _paired(y, yhat)
    return float(np.mean(y != yhat))


def squared_error(y, yhat) -> float:
    """Mean squared difference between labels and predictions."""
    y, yhat = _paired(y, yhat)
    y = y.astype(float)
    yhat = yhat.astype(float)
    if np.isnan(y).any() or np.isnan(yhat).any():
        raise ValueError("NaN in squared_error input")
    return float(np.mean((y - yhat) ** 2))


def auc(y, scores) -> float:
    """Area under the ROC curve for binary labels in {0, 1}.

    Computed from average ranks (Mann-Whitney U), so tied scores count 1/2.
    Raises :class:`DegenerateMetricError` when only one class is present.
    """
    y, scores = _paired(y, scores)
    scores = scores.astype(float)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateMetricError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_columns(y, scores) -> np.ndarray:
    """AUC of every column of an ``(n, C)`` score matrix against labels ``y``."""
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=float)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateMetricError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores, axis=0)
    u = ranks[pos].sum(axis=0) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _survival(y):
    if isinstance(y, tuple) and len(y) == 2:
        times, events = (np.asarray(a) for a in y)
    else:
        arr = np.asarray(y, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("survival labels must be an (n, 2) array of (time, event) pairs")
        times, events = arr[:, 0], arr[:, 1]
    return times.astype(float), events.astype(bool)


def concordance_index(y, scores) -> float:
    """Harrell's concordance index for risk scores.

    A pair is comparable when the sample with the strictly shorter time had an
    event. It is concordant when that sample also has the higher risk score;
    tied scores count 1/2.
    """
    times, events = _survival(y)
    _, scores = _paired(times, scores)
    scores = scores.astype(float)
    comparable = (times[:, None] < times[None, :]) & events[:, None]
    n_pairs = int(comparable.sum())
    if n_pairs == 0:
        raise DegenerateMetricError("concordance index needs at least one comparable pair")
    higher = scores[:, None] > scores[None, :]
    tied = scores[:, None] == scores[None, :]
    concordant = (comparable & higher).sum() + 0.5 * (comparable & tied).sum()
    return float(concordant / n_pairs)


_FUNCTIONS = {
    "zero-one": zero_one_loss,
    "squared-error": squared_error,
    "auc": auc,
    "c-index": concordance_index,
}


@dataclass(frozen=True)
class MetricSpec:
    """One of :data:`METRIC_KINDS` plus the properties derived from it."""

    kind: str

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric {self.kind!r}; expected one of {METRIC_KINDS}")

    @property
    def orientation(self) -> str:
        return "gain" if self.kind in _GAIN_KINDS else "loss"

    @property
    def min_samples(self) -> int:
        return 2 if self.kind in _GAIN_KINDS else 1

    @property
    def pointwise(self) -> bool:
        """True when the metric is a mean of per-sample losses."""
        return self.kind not in _GAIN_KINDS

    @property
    def prediction_kind(self) -> str:
        return _PREDICTION_KIND[self.kind]

    @property
    def survival(self) -> bool:
        return self.kind == "c-index"

    def value(self, y, yhat) -> float:
        """The metric in its native orientation."""
        return _FUNCTIONS[self.kind](y, yhat)

    def loss(self, y, yhat) -> float:
        return as_loss(self, self.value(y, yhat))

    def pointwise_loss(self, y, yhat) -> np.ndarray:
        """Per-sample losses; only defined for pointwise metrics."""
        if not self.pointwise:
            raise TypeError(f"{self.kind} has no per-sample loss")
        y = np.asarray(y)
        yhat = np.asarray(yhat)
        if self.kind == "zero-one":
            return (y != yhat).astype(float)
        return (y.astype(float) - yhat.astype(float)) ** 2

    def to_native(self, loss: float) -> float:
        """Inverse of :func:`as_loss`."""
        return 1.0 - loss if self.orientation == "gain" else loss

    def __str__(self):
        return self.kind


def get_metric(metric) -> MetricSpec:
    if isinstance(metric, MetricSpec):
        return metric
    return MetricSpec(str(metric))


def as_loss(m: MetricSpec, value: float) -> float:
    """Map a metric value to loss orientation (``1 - value`` for gains)."""
    m = get_metric(m)
    return 1.0 - value if m.orientation == "gain" else value
