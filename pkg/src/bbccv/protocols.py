"""Tuning and estimation protocols.

* :func:`run_cv`  - plain K-fold CV of one configuration.
* :func:`run_cvt` - CV of every configuration, pick the best (optimistic).
* :func:`run_ncv` - nested CV: the whole tuning procedure is cross-validated.
* :func:`tt_correct` - additive correction from per-fold winner gaps.
* :func:`bbc` - bootstrap the pooled out-of-sample predictions, re-select
  in-bag and score the winner out-of-bag.
* :func:`run_bced` - CVT that drops configurations which lose to the current
  best in almost every bootstrap, followed by :func:`bbc` on the survivors.

All internal arithmetic is in loss orientation (see :func:`metrics.as_loss`);
reports convert back to the metric's native orientation.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMetricError, ResamplingError, SelectionError
from .learners import ConfigGrid, Configuration, Dataset, TrainedModel, train
from .metrics import MetricSpec, get_metric
from .resampling import (
    MAX_REDRAWS,
    FoldPlan,
    SeedPlan,
    bootstrap_indices,
    bootstrap_weights,
    percentile_ci,
)
from .selection import PredictionStore, _alive_mask, config_losses, css

__all__ = [
    "BBCResult",
    "DropState",
    "EarlyDropper",
    "ProtocolReport",
    "TTResult",
    "bbc",
    "bbc_repeated",
    "bced_on_store",
    "count_models",
    "run_bbc_cv",
    "run_bced",
    "run_cv",
    "run_cvt",
    "run_ncv",
    "run_tt",
    "tt_correct",
]

log = logging.getLogger(__name__)

PROTOCOLS = ("cv", "cvt", "ncv", "tt", "bbc", "bced")


@dataclass
class ProtocolReport:
    """Outcome of one protocol run.

    ``estimate`` and ``ci`` are in the metric's native orientation (AUC is
    reported as AUC); ``estimate_loss`` and ``per_bootstrap_losses`` are in
    loss orientation.
    """

    protocol: str
    metric: str
    estimate: float
    estimate_loss: float
    selected_config: int
    selected_config_id: str
    models_trained: int
    ci: tuple | None = None
    per_bootstrap_losses: np.ndarray | None = None
    drop_trace: list = field(default_factory=list)
    final_model: TrainedModel | None = field(default=None, repr=False)
    selection_mode: str = "pooled"
    details: dict = field(default_factory=dict)
    failed_configs: dict = field(default_factory=dict)


def _native_ci(metric: MetricSpec, ci):
    if ci is None:
        return None
    lb, ub = ci
    if metric.orientation == "gain":
        return (1.0 - ub, 1.0 - lb)
    return (lb, ub)


def _task(metric: MetricSpec) -> str:
    return "classification" if metric.kind in ("zero-one", "auc") else "regression"


def _as_grid(grid) -> ConfigGrid:
    if isinstance(grid, ConfigGrid):
        return grid
    if isinstance(grid, Configuration):
        return ConfigGrid([grid])
    return ConfigGrid(list(grid))


def _fit_predict(config, data: Dataset, train_rows, test_rows, metric):
    model = train(config, data.take(train_rows), _task(metric))
    return model.predict(data.X[test_rows], metric.prediction_kind)


# ---------------------------------------------------------------- CV / CVT


def run_cv(config: Configuration, data: Dataset, plan: FoldPlan, metric="zero-one"):
    """K-fold CV of a single configuration.

    Returns the report (estimate = mean of the per-fold losses) and the
    vector of out-of-sample predictions for all samples.
    """
    metric = get_metric(metric)
    _check_plan(plan, data)
    predictions = np.full(len(data), np.nan)
    fold_losses = []
    for k in range(plan.K):
        test = plan.fold(k)
        pred = _fit_predict(config, data, plan.train_indices(k), test, metric)
        predictions[test] = pred
        fold_losses.append(metric.loss(data.y[test], pred))
    final = train(config, data, _task(metric))
    loss = float(np.mean(fold_losses))
    report = ProtocolReport(
        protocol="cv",
        metric=metric.kind,
        estimate=metric.to_native(loss),
        estimate_loss=loss,
        selected_config=0,
        selected_config_id=config.id,
        models_trained=plan.K + 1,
        final_model=final,
        selection_mode="fold-averaged",
        details={"fold_losses": fold_losses},
    )
    return report, predictions


def _check_plan(plan: FoldPlan, data: Dataset):
    if plan.n_samples != len(data):
        raise ResamplingError(
            f"fold plan covers {plan.n_samples} samples but the dataset has {len(data)}"
        )


def _fill_store(grid, data, plans, metric, store, failed):
    trained = 0
    for r, plan in enumerate(plans):
        for k in range(plan.K):
            test = plan.fold(k)
            train_rows = plan.train_indices(k)
            for j, config in enumerate(grid):
                if j in failed:
                    continue
                trained += 1
                try:
                    pred = _fit_predict(config, data, train_rows, test, metric)
                except Exception as exc:  # any learner crash marks the config dead
                    failed[j] = f"{type(exc).__name__}: {exc}"
                    log.warning("configuration %s failed: %s", config.id, exc)
                    continue
                store.fill(test, j, pred, k, r)
    return trained


def _alive_after_failures(n_configs, failed):
    alive = np.ones(n_configs, dtype=bool)
    alive[list(failed)] = False
    if not alive.any():
        raise SelectionError("every configuration failed to train")
    return alive


def run_cvt(grid, data: Dataset, plan, metric="zero-one", selection: str = "pooled"):
    """Cross-validate every configuration and keep the best.

    ``plan`` is one :class:`FoldPlan` or a list of them (repeated CV, one
    repeat per plan). Returns the report and the filled
    :class:`PredictionStore`. The reported estimate is the winner's own CV
    loss, which is optimistic when many configurations compete.
    """
    grid = _as_grid(grid)
    metric = get_metric(metric)
    plans = [plan] if isinstance(plan, FoldPlan) else list(plan)
    for p in plans:
        _check_plan(p, data)
    store = PredictionStore.empty(data.y, len(grid), len(plans), grid.ids)
    failed: dict = {}
    trained = _fill_store(grid, data, plans, metric, store, failed)
    alive = _alive_after_failures(len(grid), failed)
    outcome = css(store, alive=alive, metric=metric, mode=selection)
    best = outcome.best_index
    final = train(grid[best], data, _task(metric))
    trained += 1
    loss = float(outcome.pooled_losses[best])
    report = ProtocolReport(
        protocol="cvt",
        metric=metric.kind,
        estimate=metric.to_native(loss),
        estimate_loss=loss,
        selected_config=best,
        selected_config_id=grid[best].id,
        models_trained=trained,
        final_model=final,
        selection_mode=selection,
        details={"config_losses": outcome.pooled_losses.tolist(), "repeats": len(plans)},
        failed_configs={grid[j].id: msg for j, msg in failed.items()},
    )
    return report, store


def run_ncv(grid, data: Dataset, plan: FoldPlan, metric="zero-one", selection: str = "pooled"):
    """Nested CV: each outer fold is predicted by the model CVT returns on the rest.

    The inner loop reuses the remaining ``K - 1`` outer folds, so the run
    trains ``K^2 C + K + 1`` models. The final model is the one CVT returns
    on all data.
    """
    grid = _as_grid(grid)
    metric = get_metric(metric)
    _check_plan(plan, data)
    if plan.K < 3:
        raise ResamplingError("nested CV needs K >= 3 so the inner loop has two folds")
    trained = 0
    fold_losses = []
    inner_choice = []
    for k in range(plan.K):
        inner_rows = plan.train_indices(k)
        inner_plan, _ = plan.restrict(inner_rows)
        inner_report, _ = run_cvt(grid, data.take(inner_rows), inner_plan, metric, selection)
        trained += inner_report.models_trained
        test = plan.fold(k)
        pred = inner_report.final_model.predict(data.X[test], metric.prediction_kind)
        fold_losses.append(metric.loss(data.y[test], pred))
        inner_choice.append(inner_report.selected_config)
    outer, _ = run_cvt(grid, data, plan, metric, selection)
    trained += outer.models_trained
    loss = float(np.mean(fold_losses))
    return ProtocolReport(
        protocol="ncv",
        metric=metric.kind,
        estimate=metric.to_native(loss),
        estimate_loss=loss,
        selected_config=outer.selected_config,
        selected_config_id=outer.selected_config_id,
        models_trained=trained,
        final_model=outer.final_model,
        selection_mode=selection,
        details={"fold_losses": fold_losses, "inner_selected": inner_choice},
        failed_configs=outer.failed_configs,
    )


# ---------------------------------------------------------------- TT


@dataclass(frozen=True)
class TTResult:
    """TT correction in loss orientation."""

    l_cvt: float
    bias: float
    l_tt: float
    winner: int
    fold_losses: np.ndarray
    skipped_folds: tuple = ()


def tt_correct(
    store: PredictionStore,
    metric="zero-one",
    winner: int | None = None,
    skip_degenerate: bool = False,
    alive=None,
    selection: str = "pooled",
) -> TTResult:
    """Add the mean per-fold gap between the winner and each fold's best.

    ``winner`` defaults to the CVT choice on the whole store. The CVT loss
    used here is the winner's mean per-fold loss, so
    ``0 <= bias <= l_cvt`` holds exactly. Folds where the metric cannot be
    computed raise unless ``skip_degenerate`` is set, in which case they are
    left out of both averages and a warning is issued.
    """
    metric = get_metric(metric)
    if store.n_repeats != 1:
        raise ValueError("TT needs a single-repeat store")
    alive = _alive_mask(store, alive)
    cols = np.flatnonzero(alive)
    if not store.present[:, cols, 0].all():
        raise ValueError("TT needs complete prediction columns")
    if winner is None:
        winner = css(store, alive=alive, metric=metric, mode=selection).best_index
    folds = store.fold_of[:, 0]
    rows_by_fold = [np.flatnonzero(folds == k) for k in np.unique(folds) if k >= 0]
    per_fold = []
    skipped = []
    for k, rows in enumerate(rows_by_fold):
        try:
            if rows.size < metric.min_samples:
                raise DegenerateMetricError(
                    f"fold {k + 1} has {rows.size} predictions; {metric.kind} needs "
                    f"{metric.min_samples}"
                )
            losses = config_losses(store, rows, alive, metric)
        except DegenerateMetricError as exc:
            if not skip_degenerate:
                raise
            warnings.warn(f"TT skips fold {k + 1}: {exc}", stacklevel=2)
            skipped.append(k + 1)
            continue
        per_fold.append(losses)
    if not per_fold:
        raise DegenerateMetricError("no fold supports the metric")
    fold_losses = np.array(per_fold)
    winner_losses = fold_losses[:, winner]
    gaps = winner_losses - np.nanmin(fold_losses[:, cols], axis=1)
    l_cvt = float(np.mean(winner_losses))
    bias = float(np.mean(gaps))
    return TTResult(l_cvt, bias, l_cvt + bias, int(winner), fold_losses, tuple(skipped))


# ---------------------------------------------------------------- BBC


@dataclass(frozen=True)
class BBCResult:
    """BBC output in loss orientation.

    ``selected[b]`` is the configuration chosen in-bag by bootstrap ``b``;
    ``indices`` (when requested) holds the sampled sample indices, one row
    per bootstrap, shared by all repeats.
    """

    estimate: float
    ci: tuple
    per_bootstrap_losses: np.ndarray
    selected: np.ndarray
    indices: np.ndarray | None = None


def _check_bootstrap_args(B, alpha):
    if B < 100:
        raise ResamplingError(f"B must be at least 100, got {B}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if int(alpha / 2 * B + 1e-9) < 1:
        raise ResamplingError(f"B={B} is too small for alpha={alpha}")


def _stream(seed, tag, *counters):
    plan = seed if isinstance(seed, SeedPlan) else SeedPlan(int(seed))
    return plan.stream(tag, *counters)


def _bbc_pointwise(store, rows, cols, metric, B, rng):
    n = rows.size
    sums, counts = store.pointwise_sums(metric, rows)
    S = sums[:, cols]
    P = counts[:, cols].astype(float)
    if (P > 0).all():
        def valid(block):
            return (bootstrap_weights(block, n) == 0).any(axis=1)
    else:
        def valid(block):
            W = bootstrap_weights(block, n).astype(float)
            return ((W @ P) >= 1).all(axis=1) & (((W == 0) @ P) >= 1).all(axis=1)

    idx = bootstrap_indices(n, B, rng, valid)
    W = bootstrap_weights(idx, n).astype(float)
    in_loss = (W @ S) / (W @ P)
    pick = np.argmin(in_loss, axis=1)
    O = (W == 0).astype(float)
    out_s = O @ S
    out_c = O @ P
    b = np.arange(B)
    return idx, cols[pick], out_s[b, pick] / out_c[b, pick]


def _bbc_general(store, rows, alive, metric, B, rng, mode):
    n = rows.size
    idx = rng.integers(0, n, size=(B, n))
    losses = np.empty(B)
    picks = np.empty(B, dtype=np.int64)
    for b in range(B):
        for _ in range(MAX_REDRAWS + 1):
            try:
                in_bag = rows[idx[b]]
                seen = np.zeros(n, dtype=bool)
                seen[idx[b]] = True
                out_bag = rows[~seen]
                if out_bag.size == 0:
                    raise DegenerateMetricError("empty out-of-bag set")
                pick = css(store, in_bag, alive, metric, mode).best_index
                y, pred = store.pooled(pick, out_bag)
                if pred.shape[0] < metric.min_samples:
                    raise DegenerateMetricError("too few out-of-bag predictions")
                losses[b] = metric.loss(y, pred)
                picks[b] = pick
                break
            except (DegenerateMetricError, SelectionError):
                idx[b] = rng.integers(0, n, size=n)
        else:
            raise ResamplingError(f"bootstrap redraw bound ({MAX_REDRAWS}) exhausted")
    return idx, picks, losses


def bbc(
    store: PredictionStore,
    metric="zero-one",
    B: int = 1000,
    alpha: float = 0.05,
    seed=0,
    alive=None,
    selection: str = "pooled",
    return_indices: bool = False,
) -> BBCResult:
    """Bootstrap bias-corrected estimate and percentile CI from pooled predictions.

    Rows (samples) are resampled with replacement; every repeat of a sampled
    sample comes along, so selection pools all repeats of the in-bag rows.
    For each draw the configuration with the lowest in-bag loss is scored on
    the out-of-bag rows. Only samples with at least one prediction are
    resampled, so partially run CV works too. Draws where some configuration
    lacks predictions, or the metric is undefined, are redrawn.

    Draws come from the ``("bbc",)`` stream of ``seed``.
    """
    metric = get_metric(metric)
    _check_bootstrap_args(B, alpha)
    alive = _alive_mask(store, alive)
    rows = store.observed_rows(alive)
    if rows.size < 2:
        raise ResamplingError("BBC needs at least two samples with predictions")
    rng = _stream(seed, "bbc")
    if metric.pointwise and selection == "pooled":
        idx, picks, losses = _bbc_pointwise(store, rows, np.flatnonzero(alive), metric, B, rng)
    else:
        idx, picks, losses = _bbc_general(store, rows, alive, metric, B, rng, selection)
    ci = percentile_ci(losses, alpha)
    return BBCResult(
        estimate=float(np.mean(losses)),
        ci=ci,
        per_bootstrap_losses=losses,
        selected=picks,
        indices=rows[idx] if return_indices else None,
    )


def bbc_repeated(store: PredictionStore, metric="zero-one", B=1000, alpha=0.05, seed=0, **kwargs):
    """:func:`bbc` over a store with several repeats (same row-level resampling)."""
    if store.n_repeats < 1:
        raise ValueError("store has no repeats")
    return bbc(store, metric, B, alpha, seed, **kwargs)


def run_bbc_cv(
    grid,
    data: Dataset,
    plan,
    metric="zero-one",
    B: int = 1000,
    alpha: float = 0.05,
    seed=0,
    selection: str = "pooled",
):
    """CVT followed by :func:`bbc`; same final model as CVT."""
    metric = get_metric(metric)
    cvt_report, store = run_cvt(grid, data, plan, metric, selection)
    alive = np.array([cid not in cvt_report.failed_configs for cid in store.config_ids])
    result = bbc(store, metric, B, alpha, seed, alive=alive, selection=selection)
    report = ProtocolReport(
        protocol="bbc",
        metric=metric.kind,
        estimate=metric.to_native(result.estimate),
        estimate_loss=result.estimate,
        selected_config=cvt_report.selected_config,
        selected_config_id=cvt_report.selected_config_id,
        models_trained=cvt_report.models_trained,
        ci=_native_ci(metric, result.ci),
        per_bootstrap_losses=result.per_bootstrap_losses,
        final_model=cvt_report.final_model,
        selection_mode=selection,
        details={"l_cvt": cvt_report.estimate, "repeats": store.n_repeats, "B": B, "alpha": alpha},
        failed_configs=cvt_report.failed_configs,
    )
    return report, store


def run_tt(grid, data: Dataset, plan: FoldPlan, metric="zero-one", skip_degenerate=False):
    """CVT followed by :func:`tt_correct`."""
    metric = get_metric(metric)
    cvt_report, store = run_cvt(grid, data, plan, metric)
    alive = np.array([cid not in cvt_report.failed_configs for cid in store.config_ids])
    tt = tt_correct(
        store, metric, winner=cvt_report.selected_config, skip_degenerate=skip_degenerate, alive=alive
    )
    report = ProtocolReport(
        protocol="tt",
        metric=metric.kind,
        estimate=metric.to_native(tt.l_tt),
        estimate_loss=tt.l_tt,
        selected_config=cvt_report.selected_config,
        selected_config_id=cvt_report.selected_config_id,
        models_trained=cvt_report.models_trained,
        final_model=cvt_report.final_model,
        details={"l_cvt": metric.to_native(tt.l_cvt), "tt_bias": tt.bias,
                 "skipped_folds": list(tt.skipped_folds)},
        failed_configs=cvt_report.failed_configs,
    )
    return report, store


# ---------------------------------------------------------------- early dropping


@dataclass
class DropState:
    alive: np.ndarray
    dropped_at: dict = field(default_factory=dict)
    p_hat: np.ndarray | None = None

    @classmethod
    def start(cls, n_configs: int):
        return cls(np.ones(n_configs, dtype=bool), {}, np.zeros(n_configs))


class EarlyDropper:
    """Bootstrap test that retires configurations during CV.

    At a fold boundary, with ``theta_o`` the current best on the rows seen so
    far, ``p_hat[theta]`` is the share of bootstrap resamples of those rows in
    which ``theta`` has a strictly higher loss than ``theta_o``. Every
    configuration with ``p_hat > alpha_drop`` is dropped for good.
    """

    def __init__(self, n_configs, metric, B=1000, alpha_drop=0.99, min_oos=50, seed=0):
        self.metric = get_metric(metric)
        if not 0.5 < alpha_drop <= 1:
            raise ValueError("alpha_drop must be in (0.5, 1]")
        if min_oos < self.metric.min_samples:
            raise ValueError(f"min_oos must be at least {self.metric.min_samples}")
        if B < 1:
            raise ValueError("B must be positive")
        self.B = B
        self.alpha_drop = alpha_drop
        self.min_oos = min_oos
        self.seed = seed
        self.state = DropState.start(n_configs)
        self.trace: list = []

    def _in_bag_losses(self, store, rows, cols, rng):
        n = rows.size
        metric = self.metric
        if metric.pointwise:
            sums, counts = store.pointwise_sums(metric, rows)
            S = sums[:, cols]
            P = counts[:, cols].astype(float)

            def valid(block):
                return ((bootstrap_weights(block, n) @ P) >= 1).all(axis=1)

            W = bootstrap_weights(bootstrap_indices(n, self.B, rng, valid), n).astype(float)
            return (W @ S) / (W @ P)
        alive = np.zeros(store.n_configs, dtype=bool)
        alive[cols] = True
        idx = rng.integers(0, n, size=(self.B, n))
        out = np.empty((self.B, cols.size))
        for b in range(self.B):
            for _ in range(MAX_REDRAWS + 1):
                try:
                    losses = config_losses(store, rows[idx[b]], alive, metric)[cols]
                    if np.isnan(losses).any():
                        raise DegenerateMetricError("configuration without in-bag predictions")
                    out[b] = losses
                    break
                except DegenerateMetricError:
                    idx[b] = rng.integers(0, n, size=n)
            else:
                raise ResamplingError(f"bootstrap redraw bound ({MAX_REDRAWS}) exhausted")
        return out

    def test(self, store: PredictionStore, rows, fold: int) -> list:
        """Run the test on ``rows`` after ``fold`` (1-based); return dropped indices."""
        rows = np.asarray(rows)
        if rows.size < self.min_oos:
            return []
        state = self.state
        cols = np.flatnonzero(state.alive)
        best = css(store, rows, state.alive, self.metric).best_index
        rng = _stream(self.seed, "drop", fold)
        losses = self._in_bag_losses(store, rows, cols, rng)
        ref = losses[:, np.searchsorted(cols, best)]
        p_hat = (losses > ref[:, None]).mean(axis=0)
        state.p_hat[cols] = p_hat
        assert p_hat[np.searchsorted(cols, best)] == 0.0
        dropped = cols[p_hat > self.alpha_drop]
        for j in dropped:
            state.alive[j] = False
            state.dropped_at[int(j)] = fold
            self.trace.append((fold, int(j), float(state.p_hat[j])))
        return [int(j) for j in dropped]


def _bced_loop(n_configs, plan, metric, store, fill_fold, B, alpha_drop, min_oos, seed):
    dropper = EarlyDropper(n_configs, metric, B, alpha_drop, min_oos, seed)
    trained = 0
    seen = []
    for k in range(plan.K):
        n_fit, failed = fill_fold(k, np.flatnonzero(dropper.state.alive))
        trained += n_fit
        dropper.state.alive[failed] = False
        if not dropper.state.alive.any():
            raise SelectionError("every configuration failed to train")
        seen.append(plan.fold(k))
        if k < plan.K - 1:
            dropper.test(store, np.concatenate(seen), k + 1)
    return dropper, trained


def _bced_report(store, dropper, metric, B, alpha, seed, trained, protocol="bced"):
    state = dropper.state
    final = css(store, alive=state.alive, metric=metric)
    assert state.alive[final.best_index]
    result = bbc(store, metric, B, alpha, seed, alive=state.alive)
    return ProtocolReport(
        protocol=protocol,
        metric=metric.kind,
        estimate=metric.to_native(result.estimate),
        estimate_loss=result.estimate,
        selected_config=final.best_index,
        selected_config_id=store.config_ids[final.best_index],
        models_trained=trained,
        ci=_native_ci(metric, result.ci),
        per_bootstrap_losses=result.per_bootstrap_losses,
        drop_trace=list(dropper.trace),
        details={
            "alpha_drop": dropper.alpha_drop,
            "min_oos": dropper.min_oos,
            "B": B,
            "alpha": alpha,
            "survivors": int(state.alive.sum()),
        },
    )


def run_bced(
    grid,
    data: Dataset,
    plan: FoldPlan,
    metric="zero-one",
    B: int = 1000,
    alpha_drop: float = 0.99,
    min_oos: int = 50,
    seed=0,
    alpha: float = 0.05,
):
    """CVT with early dropping, then BBC on the surviving configurations.

    Folds are processed in order. After every fold but the last, once at
    least ``min_oos`` samples have out-of-sample predictions, the
    :class:`EarlyDropper` test retires clearly inferior configurations; they
    are not trained on later folds. The final configuration is the best
    survivor on its complete predictions, and the estimate and CI come from
    :func:`bbc` restricted to survivor columns.
    """
    grid = _as_grid(grid)
    metric = get_metric(metric)
    _check_plan(plan, data)
    _check_bootstrap_args(B, alpha)
    store = PredictionStore.empty(data.y, len(grid), 1, grid.ids)
    failures: dict = {}

    def fill_fold(k, configs):
        test = plan.fold(k)
        train_rows = plan.train_indices(k)
        failed = []
        for j in configs:
            try:
                pred = _fit_predict(grid[j], data, train_rows, test, metric)
            except Exception as exc:  # any learner crash marks the config dead
                failures[grid[j].id] = f"{type(exc).__name__}: {exc}"
                log.warning("configuration %s failed: %s", grid[j].id, exc)
                failed.append(j)
                continue
            store.fill(test, j, pred, k)
        return len(configs), failed

    dropper, trained = _bced_loop(
        len(grid), plan, metric, store, fill_fold, B, alpha_drop, min_oos, seed
    )
    report = _bced_report(store, dropper, metric, B, alpha, seed, trained + 1)
    report.final_model = train(grid[report.selected_config], data, _task(metric))
    report.failed_configs = failures
    return report, store


def bced_on_store(
    full: PredictionStore,
    plan: FoldPlan,
    metric="zero-one",
    B: int = 1000,
    alpha_drop: float = 0.99,
    min_oos: int = 50,
    seed=0,
    alpha: float = 0.05,
):
    """Replay early dropping on an already complete store.

    Predictions of a configuration on fold ``k`` are revealed only while the
    configuration is alive, which mimics :func:`run_bced` without learners.
    ``models_trained`` counts the trainings the replay would have needed.
    """
    metric = get_metric(metric)
    _check_bootstrap_args(B, alpha)
    if full.n_repeats != 1:
        raise ValueError("early dropping replays a single repeat")
    store = PredictionStore.empty(full.labels, full.n_configs, 1, full.config_ids)

    def fill_fold(k, configs):
        test = plan.fold(k)
        for j in configs:
            store.fill(test, j, full.values[test, j, 0], k)
        return len(configs), []

    dropper, trained = _bced_loop(
        full.n_configs, plan, metric, store, fill_fold, B, alpha_drop, min_oos, seed
    )
    return _bced_report(store, dropper, metric, B, alpha, seed, trained + 1), store


# ---------------------------------------------------------------- accounting


def count_models(protocol: str, K: int, C: int, drop_trace=None, repeats: int = 1) -> int:
    """Number of models a protocol trains (including the final model).

    For ``"bced"`` each configuration counts one training per fold it was
    alive for; a configuration dropped after fold ``f`` was trained ``f``
    times.
    """
    if protocol == "cv":
        return K + 1
    if protocol in ("cvt", "tt", "bbc"):
        return repeats * K * C + 1
    if protocol == "ncv":
        return K * K * C + K + 1
    if protocol == "bced":
        folds_alive = np.full(C, K)
        for fold, config, *_ in drop_trace or []:
            folds_alive[config] = fold
        return int(folds_alive.sum()) + 1
    raise ValueError(f"unknown protocol {protocol!r}")
