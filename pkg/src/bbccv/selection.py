"""Pooled out-of-sample predictions and the configuration selection strategy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SelectionError
from .metrics import MetricSpec, auc_columns, get_metric

__all__ = ["PredictionStore", "SelectionOutcome", "css", "config_losses"]

SELECTION_MODES = ("pooled", "fold-averaged")


@dataclass
class PredictionStore:
    """``N x C x R`` tensor of out-of-sample predictions.

    ``present`` flags the filled cells (CV runs may stop early or drop
    configurations). ``fold_of[i, r]`` is the 0-based fold that held out
    sample ``i`` in repeat ``r``, or -1 if that repeat never reached it.
    Labels are a vector, or an ``(N, 2)`` array of (time, event) pairs for
    survival data.
    """

    values: np.ndarray
    present: np.ndarray
    labels: np.ndarray
    fold_of: np.ndarray
    config_ids: list = field(default_factory=list)
    sample_ids: list | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 2:
            self.values = self.values[:, :, None]
        self.present = np.asarray(self.present, dtype=bool)
        if self.present.ndim == 2:
            self.present = self.present[:, :, None]
        self.labels = np.asarray(self.labels)
        self.fold_of = np.asarray(self.fold_of, dtype=np.int64)
        if self.fold_of.ndim == 1:
            self.fold_of = self.fold_of[:, None]
        N, C, R = self.values.shape
        if self.present.shape != (N, C, R):
            raise ValueError("present mask shape does not match values")
        if self.labels.shape[0] != N:
            raise ValueError("labels length does not match the number of samples")
        if self.fold_of.shape != (N, R):
            raise ValueError("fold_of must have shape (N, R)")
        if not self.config_ids:
            self.config_ids = [f"config-{j + 1}" for j in range(C)]
        if len(self.config_ids) != C:
            raise ValueError("one config id per column required")
        if self.sample_ids is not None and len(self.sample_ids) != N:
            raise ValueError("one sample id per row required")
        if np.isnan(self.values[self.present]).any():
            raise ValueError("present cells must hold valid predictions")

    @classmethod
    def empty(cls, labels, n_configs: int, n_repeats: int = 1, config_ids=None):
        labels = np.asarray(labels)
        N = labels.shape[0]
        shape = (N, n_configs, n_repeats)
        return cls(
            values=np.full(shape, np.nan),
            present=np.zeros(shape, dtype=bool),
            labels=labels,
            fold_of=np.full((N, n_repeats), -1),
            config_ids=list(config_ids) if config_ids is not None else [],
        )

    @classmethod
    def from_matrix(cls, matrix, labels, fold_of, config_ids=None):
        """Complete single-repeat store from an ``N x C`` matrix."""
        matrix = np.asarray(matrix, dtype=float)
        return cls(
            values=matrix,
            present=np.ones(matrix.shape, dtype=bool),
            labels=labels,
            fold_of=fold_of,
            config_ids=list(config_ids) if config_ids is not None else [],
        )

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_configs(self) -> int:
        return self.values.shape[1]

    @property
    def n_repeats(self) -> int:
        return self.values.shape[2]

    def fill(self, rows, config: int, predictions, fold: int, repeat: int = 0):
        rows = np.asarray(rows)
        self.values[rows, config, repeat] = predictions
        self.present[rows, config, repeat] = True
        self.fold_of[rows, repeat] = fold

    def is_complete(self) -> bool:
        return bool(self.present.all())

    def observed_rows(self, alive=None) -> np.ndarray:
        """Samples with at least one prediction from an alive configuration."""
        alive = _alive_mask(self, alive)
        return np.flatnonzero(self.present[:, alive, :].any(axis=(1, 2)))

    def pooled(self, config: int, rows=None):
        """Labels and predictions of one configuration over ``rows`` and all repeats."""
        rows = np.arange(self.n_samples) if rows is None else np.asarray(rows)
        mask = self.present[rows, config, :]
        ri, rr = np.nonzero(mask)
        return self.labels[rows][ri], self.values[rows, config, :][ri, rr]

    def subset(self, configs) -> PredictionStore:
        """Store restricted to the given configuration columns."""
        configs = np.asarray(configs)
        return PredictionStore(
            values=self.values[:, configs, :],
            present=self.present[:, configs, :],
            labels=self.labels,
            fold_of=self.fold_of,
            config_ids=[self.config_ids[j] for j in configs],
            sample_ids=self.sample_ids,
        )

    def pointwise_sums(self, metric: MetricSpec, rows=None):
        """Per-sample loss sums and prediction counts over repeats, each ``(n, C)``."""
        rows = np.arange(self.n_samples) if rows is None else np.asarray(rows)
        vals = self.values[rows]
        mask = self.present[rows]
        y = self.labels[rows][:, None, None]
        losses = np.where(mask, metric.pointwise_loss(y, np.where(mask, vals, 0.0)), 0.0)
        return losses.sum(axis=2), mask.sum(axis=2)


def _alive_mask(store: PredictionStore, alive) -> np.ndarray:
    if alive is None:
        return np.ones(store.n_configs, dtype=bool)
    alive = np.asarray(alive)
    if alive.dtype == bool:
        if alive.shape != (store.n_configs,):
            raise ValueError("alive mask must have one entry per configuration")
        return alive
    mask = np.zeros(store.n_configs, dtype=bool)
    mask[alive] = True
    return mask


@dataclass(frozen=True)
class SelectionOutcome:
    best_index: int
    pooled_losses: np.ndarray


def _pooled_losses(store, rows, alive, metric):
    losses = np.full(store.n_configs, np.nan)
    if metric.pointwise:
        sums, counts = store.pointwise_sums(metric, rows)
        total, n = sums.sum(axis=0), counts.sum(axis=0)
        ok = alive & (n >= metric.min_samples)
        losses[ok] = total[ok] / n[ok]
        return losses
    if metric.kind == "auc" and store.present[rows][:, alive, :].all():
        R = store.n_repeats
        if rows.size * R >= metric.min_samples:
            vals = store.values[rows][:, alive, :].transpose(0, 2, 1).reshape(rows.size * R, -1)
            y = np.repeat(store.labels[rows], R)
            losses[alive] = 1.0 - auc_columns(y, vals)
        return losses
    for j in np.flatnonzero(alive):
        y, pred = store.pooled(j, rows)
        if pred.shape[0] >= metric.min_samples:
            losses[j] = metric.loss(y, pred)
    return losses


def _fold_averaged_losses(store, rows, alive, metric):
    losses = np.full(store.n_configs, np.nan)
    folds = store.fold_of[rows]
    for j in np.flatnonzero(alive):
        per_fold = []
        for r in range(store.n_repeats):
            for k in np.unique(folds[:, r]):
                if k < 0:
                    continue
                group = rows[folds[:, r] == k]
                mask = store.present[group, j, r]
                if mask.sum() < metric.min_samples:
                    continue
                per_fold.append(
                    metric.loss(store.labels[group][mask], store.values[group, j, r][mask])
                )
        if per_fold:
            losses[j] = np.mean(per_fold)
    return losses


def config_losses(store, rows=None, alive=None, metric="zero-one", mode="pooled") -> np.ndarray:
    """Loss of every alive configuration on ``rows`` (NaN where not computable).

    ``rows`` may repeat indices (bootstrap in-bag samples count with their
    multiplicity).
    """
    metric = get_metric(metric)
    rows = np.arange(store.n_samples) if rows is None else np.asarray(rows)
    if rows.size == 0:
        raise SelectionError("no rows to select on")
    alive = _alive_mask(store, alive)
    if mode == "pooled":
        return _pooled_losses(store, rows, alive, metric)
    if mode == "fold-averaged":
        return _fold_averaged_losses(store, rows, alive, metric)
    raise ValueError(f"unknown selection mode {mode!r}; expected one of {SELECTION_MODES}")


def css(store, rows=None, alive=None, metric="zero-one", mode="pooled") -> SelectionOutcome:
    """Select the configuration with the minimum loss; ties go to the lowest index.

    Raises :class:`SelectionError` when no alive configuration has at least
    ``metric.min_samples`` predictions on ``rows``. Degenerate metric inputs
    (e.g. single-class AUC) raise :class:`DegenerateMetricError`.
    """
    losses = config_losses(store, rows, alive, metric, mode)
    if np.isnan(losses).all():
        raise SelectionError("no alive configuration has enough predictions on these rows")
    return SelectionOutcome(int(np.nanargmin(losses)), losses)

