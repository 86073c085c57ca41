"""Acceptance criteria, one test per criterion.

Each test appends a ``PASS``/``FAIL`` line to ``RESULTS``; the lines are
printed as they happen and again in the terminal summary. Run on its own with

    pytest tests/test_acceptance.py -v

The smoke-grid study behind criteria 3, 6 and 8 runs once per session
(about 1-2 minutes on one core).
"""

import math
import sys
import time

import numpy as np
import pytest
from conftest import random_binary_store
from oracles import auc_pairs, bbc_loop_repeats, css_scan, model_count

import bbccv.protocols as protocols
from bbccv.learners import Configuration, Dataset, count_trainings, register_learner
from bbccv.metrics import auc
from bbccv.protocols import bbc, bced_on_store, count_models, run_bced, run_cv, run_cvt, run_ncv, tt_correct
from bbccv.resampling import SeedPlan, bootstrap_indices, bootstrap_weights, stratified_fold_plan
from bbccv.selection import PredictionStore, css
from bbccv.simulation import preset, run_bias_study

RESULTS: list[str] = []


def record(n: int, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _constant(X, y, task, j=0):
    return (lambda Xq, kind: np.zeros(Xq.shape[0], dtype=int)), False


def _label_echo(X, y, task, flip=False):
    def predict(Xq, kind):
        v = Xq[:, 0].astype(int)
        return 1 - v if flip else v

    return predict, False


register_learner("tally", _constant, replace=True)
register_learner("label-echo", _label_echo, replace=True)


@pytest.fixture(scope="module")
def smoke():
    start = time.perf_counter()
    study = run_bias_study(preset("smoke"), K=10, B=1000, alpha_drop=0.99, min_oos=50)
    return study, time.perf_counter() - start


# ---------------------------------------------------------------- 1


def test_criterion_01_model_counts():
    rng = np.random.default_rng(2024)
    y = np.array([0, 1] * 15)
    data = Dataset(np.zeros((30, 1)), y)
    mismatches = []
    start = time.perf_counter()
    for _ in range(200):
        K, C = int(rng.integers(2, 11)), int(rng.integers(1, 51))
        grid = [Configuration.make("tally", j=j) for j in range(C)]
        plan = stratified_fold_plan(y, K, seed=int(rng.integers(2**31)))
        with count_trainings() as t:
            run_cv(grid[0], data, plan)
        if t.n != model_count("cv", K, C):
            mismatches.append(("cv", K, C, t.n))
        with count_trainings() as t:
            run_cvt(grid, data, plan)
        if t.n != model_count("cvt", K, C):
            mismatches.append(("cvt", K, C, t.n))
        # nested CV needs an inner CV of at least two folds
        K_ncv = max(K, 3)
        plan = stratified_fold_plan(y, K_ncv, seed=int(rng.integers(2**31)))
        with count_trainings() as t:
            report = run_ncv(grid, data, plan)
        if not t.n == report.models_trained == model_count("ncv", K_ncv, C):
            mismatches.append(("ncv", K_ncv, C, t.n))
    elapsed = time.perf_counter() - start
    record(1, not mismatches and elapsed < 60,
           f"200 settings, {len(mismatches)} count mismatches, {elapsed:.1f}s (< 60s)")


# ---------------------------------------------------------------- 2


def test_criterion_02_tt_bounds():
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(10_000):
        N = int(rng.integers(2, 40))
        store, _ = random_binary_store(rng, N, int(rng.integers(1, 10)), int(rng.integers(2, N + 1)))
        tt = tt_correct(store)
        if not (0 <= tt.bias <= tt.l_cvt and tt.l_cvt <= tt.l_tt <= 2 * tt.l_cvt):
            violations += 1
    N = 10
    loo = PredictionStore.from_matrix(1 - np.eye(N, dtype=int), np.zeros(N, dtype=int), np.arange(N))
    tt = tt_correct(loo)
    record(2, violations == 0 and tt.l_tt == 2 * tt.l_cvt,
           f"{violations} bound violations in 10000 stores; LOO L_TT={tt.l_tt!r} = 2*{tt.l_cvt!r}")


# ---------------------------------------------------------------- 3


def _stats(study, i, protocol):
    b = study.values(i, protocol)
    return b.mean(), b.std(ddof=1) / math.sqrt(b.size)


def test_criterion_03_bias_signs(smoke):
    study, elapsed = smoke
    failures, notes = [], []
    for i, s in enumerate(study.settings):
        tag = f"N={s.N},C={s.C}"
        if s.N == 20:
            m, se = _stats(study, i, "cvt")
            notes.append(f"cvt[{tag}]={m:+.3f}")
            if not (m > 0 and m + 2 * se >= 0.05):
                failures.append(f"(a) {tag} cvt {m:+.4f}")
        m, se = _stats(study, i, "bbc")
        if not (-0.06 - 2 * se <= m <= 0.01 + 2 * se):
            failures.append(f"(b) {tag} bbc {m:+.4f}")
        m, se = _stats(study, i, "ncv")
        if not abs(m) <= 0.03 + 2 * se:
            failures.append(f"(c) {tag} ncv {m:+.4f}")
        diff = study.values(i, "bced") - study.values(i, "ncv")
        d_se = diff.std(ddof=1) / math.sqrt(diff.size)
        if not abs(diff.mean()) <= 0.02 + 2 * d_se:
            failures.append(f"(d) {tag} bced-ncv {diff.mean():+.4f} (se {d_se:.4f})")
    worst_bbc = min(study.values(i, "bbc").mean() for i in range(len(study.settings)))
    worst_ncv = max(abs(study.values(i, "ncv").mean()) for i in range(len(study.settings)))
    worst_d = max(abs((study.values(i, "bced") - study.values(i, "ncv")).mean())
                  for i in range(len(study.settings)))
    ok = not failures and elapsed < 600
    record(3, ok,
           f"{', '.join(notes)}; min bbc {worst_bbc:+.3f}; max |ncv| {worst_ncv:.3f}; "
           f"max |bced-ncv| {worst_d:.3f}; {elapsed:.0f}s"
           + (f"; failed: {failures}" if failures else ""))


# ---------------------------------------------------------------- 4


def test_criterion_04_single_config_convergence():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        store, _ = random_binary_store(rng, 200, 1, 10)
        raw = float((store.values[:, 0, 0] != store.labels).mean())
        worst = max(worst, abs(bbc(store, B=10_000, seed=seed).estimate - raw))
    record(4, worst < 0.01, f"max |L_BBC - pooled loss| over 20 seeds = {worst:.4f} (< 0.01)")


# ---------------------------------------------------------------- 5


def test_criterion_05_distinct_fraction():
    idx = bootstrap_indices(1000, 10_000, SeedPlan(0).stream("bbc"))
    frac = float((bootstrap_weights(idx, 1000) > 0).mean())
    record(5, 0.627 <= frac <= 0.637, f"mean distinct in-bag fraction {frac:.4f} in [0.627, 0.637]")


# ---------------------------------------------------------------- 6


def test_criterion_06_ci_contract_and_coverage(smoke):
    rng = np.random.default_rng(6)
    store, _ = random_binary_store(rng, 100, 20, 10)
    res = bbc(store, B=1000, alpha=0.05, seed=1)
    ordered = np.sort(res.per_bootstrap_losses)
    exact = res.ci == (ordered[24], ordered[974])
    study, _ = smoke
    cov = {}
    for i, s in enumerate(study.settings):
        if s.N == 100:
            cov[s.C] = study.row(i, "bbc").coverage
    ok = exact and all(c >= 0.90 for c in cov.values())
    text = ", ".join(f"C={c}: {v:.3f}" for c, v in cov.items())
    record(6, ok, f"endpoints are b(25), b(975): {exact}; N=100 coverage {text} (>= 0.90)")


# ---------------------------------------------------------------- 7


def test_criterion_07_bced_reductions():
    identical = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        store, plan = random_binary_store(rng, 150, int(rng.integers(2, 30)), 10)
        report, _ = bced_on_store(store, plan, B=1000, alpha_drop=1.0, min_oos=20, seed=seed)
        ref = bbc(store, B=1000, seed=seed)
        same = (
            report.drop_trace == []
            and report.selected_config == css(store).best_index
            and report.estimate == ref.estimate
            and report.ci == ref.ci
            and np.array_equal(report.per_bootstrap_losses, ref.per_bootstrap_losses)
        )
        identical += same

    y = np.random.default_rng(0).integers(0, 2, size=500)
    data = Dataset(np.column_stack([y, np.arange(500)]).astype(float), y)
    grid = [Configuration("label-echo"), Configuration.make("label-echo", flip=True)]
    plan = stratified_fold_plan(y, 10, seed=0)
    with count_trainings() as t:
        report, _ = run_bced(grid, data, plan, B=1000, alpha_drop=0.99, min_oos=50)
    scenario = report.drop_trace == [(1, 1, 1.0)] and t.n == report.models_trained == 12
    ok = identical == 50 and scenario and count_models("cvt", 10, 2) == 21
    record(7, ok, f"{identical}/50 seeds bit-identical to CVT+BBC; drop trace {report.drop_trace}, "
                  f"{t.n} trainings instead of 21")


# ---------------------------------------------------------------- 8


def test_criterion_08_bced_speedup(smoke):
    study, _ = smoke
    i = study.find(500, 100)
    ratios = count_models("cvt", study.K, 100) / study.values(i, "bced", "models_trained")
    record(8, ratios.mean() >= 2, f"N=500, C=100 mean CVT/BCED training ratio {ratios.mean():.2f} (>= 2)")


# ---------------------------------------------------------------- 9


def test_criterion_09_joint_rows(monkeypatch):
    rng = np.random.default_rng(9)
    N, C, R = 40, 6, 3
    labels = rng.integers(0, 2, size=N)
    correct = rng.uniform(size=(N, C, R)) < rng.uniform(0.4, 0.9, size=(1, C, 1))
    values = np.where(correct, labels[:, None, None], 1 - labels[:, None, None]).astype(float)
    fold_of = np.column_stack([rng.permutation(np.arange(N) % 5) for _ in range(R)])
    store = PredictionStore(values, np.ones_like(values, bool), labels, fold_of)

    # fast path: per-draw losses must match a loop that carries every repeat of a drawn row
    res = bbc(store, B=300, seed=2, return_indices=True)
    tensor = values.astype(int).tolist()
    joint = np.allclose(res.per_bootstrap_losses,
                        bbc_loop_repeats(tensor, labels.tolist(), res.indices.tolist()), atol=1e-15)

    # general path: record the cells each draw scores out of bag
    seen = []
    original = PredictionStore.pooled

    def spy(self, j, rows):
        rows = np.asarray(rows)
        seen.append(rows.copy())
        return original(self, j, rows)

    monkeypatch.setattr(PredictionStore, "pooled", spy)
    general = bbc(store, "auc", B=100, seed=2, return_indices=True)
    monkeypatch.undo()
    same_across = all(
        set(rows.tolist()) == set(range(N)) - set(draw.tolist())
        for rows, draw in zip(seen[-100:], general.indices)
    )
    # the out-of-bag rows are per sample, so every repeat of a sample is scored together
    cells_ok = all(
        original(store, 0, rows)[0].shape[0] == rows.size * R for rows in seen[-100:]
    )

    single = PredictionStore(values[:, :, :1], np.ones((N, C, 1), bool), labels, fold_of[:, :1])
    twice = PredictionStore(
        np.repeat(values[:, :, :1], 2, axis=2), np.ones((N, C, 2), bool), labels,
        np.repeat(fold_of[:, :1], 2, axis=1),
    )
    a, b = bbc(single, B=1000, seed=4), bbc(twice, B=1000, seed=4)
    dup = a.estimate == b.estimate and a.ci == b.ci
    record(9, joint and same_across and cells_ok and dup,
           f"joint-row oracle match {joint}; general path multiset shared across repeats "
           f"{same_across and cells_ok}; duplicated repeat reproduces R=1 {dup}")


# ---------------------------------------------------------------- 10


def test_criterion_10_oracles():
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 60))
        y = rng.integers(0, 2, size=n)
        y[rng.choice(n, 2, replace=False)] = [0, 1]
        s = rng.integers(0, 8, size=n) / 7 if rng.uniform() < 0.5 else rng.normal(size=n)
        worst = max(worst, abs(auc(y, s) - auc_pairs(y.tolist(), s.tolist())))
    agree = 0
    for _ in range(500):
        N, C = int(rng.integers(2, 50)), int(rng.integers(1, 30))
        store, _ = random_binary_store(rng, N, C, 2)
        matrix = store.values[:, :, 0].astype(int).tolist()
        agree += css(store).best_index == css_scan(matrix, store.labels.tolist())
    record(10, worst <= 1e-12 and agree == 500,
           f"max |AUC - pairs| = {worst:.1e} over 1000 instances; css winners agree {agree}/500")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
