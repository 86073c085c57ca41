"""Synthetic bias study on simulated correctness matrices.

Each replicate draws true accuracies ``P_j ~ Beta(a, b)`` for ``C``
configurations and uniform latent draws ``r``; configuration ``j`` is correct
on sample ``i`` exactly when ``r < P_j``. Two latent layouts are available:

``"independent"`` (default)
    one ``r_ij`` per cell, so columns are independent Bernoulli(P_j) draws.
    This is the layout under which tuning on small samples is strongly
    optimistic (CVT bias near 0.15 accuracy at N=20).
``"shared"``
    one ``r_i`` per sample shared by all columns. A better configuration is
    then correct wherever a worse one is, the best configuration wins every
    fold, and selection bias nearly vanishes.

The matrix is handed to the protocols as 0-1 predictions against an all-ones
label vector, so a prediction of 1 means "correct". Every protocol in a
replicate sees the same fold plan. The bias of a protocol is its estimated
accuracy minus the true accuracy of the configuration it returns.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .protocols import bbc, bced_on_store, count_models, tt_correct
from .resampling import FoldPlan, SeedPlan, unstratified_fold_plan
from .selection import PredictionStore, css

__all__ = [
    "BiasRecord",
    "BiasRow",
    "BiasStudy",
    "FULL_GRID",
    "SMOKE_GRID",
    "STUDY_PROTOCOLS",
    "SimInstance",
    "SimSetting",
    "generate_instance",
    "instance_from_perf",
    "preset",
    "run_bias_study",
    "run_replicate",
    "simulate_ncv_on_matrix",
]

STUDY_PROTOCOLS = ("cvt", "tt", "ncv", "bbc", "bced")

WORKERS_ENV = "BBCCV_WORKERS"

LATENT_MODES = ("independent", "shared")


@dataclass(frozen=True)
class SimSetting:
    N: int
    C: int
    beta_a: float = 9.0
    beta_b: float = 6.0
    reps: int = 200
    seed: int = 0
    latent: str = "independent"

    def __post_init__(self):
        if self.N < 2 or self.C < 1:
            raise ValueError(f"need N >= 2 and C >= 1, got N={self.N}, C={self.C}")
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ValueError("Beta parameters must be positive")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.latent not in LATENT_MODES:
            raise ValueError(f"latent must be one of {LATENT_MODES}")

    @property
    def mu(self) -> float:
        """Mean of the Beta distribution of true accuracies."""
        return self.beta_a / (self.beta_a + self.beta_b)

    def key(self) -> tuple[int, ...]:
        # Beta parameters enter the seed as micro-units
        return (self.N, self.C, round(self.beta_a * 1e6), round(self.beta_b * 1e6))

    def seeds(self, replicate: int) -> SeedPlan:
        return SeedPlan(self.seed).derive("replicate", *self.key(), replicate)


@dataclass(frozen=True)
class SimInstance:
    correctness: np.ndarray
    true_perf: np.ndarray
    latent: np.ndarray

    @property
    def N(self) -> int:
        return self.correctness.shape[0]

    @property
    def C(self) -> int:
        return self.correctness.shape[1]

    def store(self, plan: FoldPlan) -> PredictionStore:
        """0-1 prediction store: label 1 everywhere, prediction 1 when correct."""
        return PredictionStore.from_matrix(
            self.correctness, np.ones(self.N, dtype=np.int64), plan.assignment
        )


def instance_from_perf(true_perf, latent) -> SimInstance:
    """Correctness matrix for known accuracies.

    ``latent`` is a length-N vector (shared across columns) or an N x C matrix.
    """
    true_perf = np.asarray(true_perf, dtype=float)
    latent = np.asarray(latent, dtype=float)
    r = latent[:, None] if latent.ndim == 1 else latent
    correctness = (r < true_perf[None, :]).astype(np.int8)
    return SimInstance(correctness, true_perf, latent)


def generate_instance(setting: SimSetting, replicate: int = 0) -> SimInstance:
    rng = setting.seeds(replicate).stream("instance")
    perf = rng.beta(setting.beta_a, setting.beta_b, size=setting.C)
    shape = setting.N if setting.latent == "shared" else (setting.N, setting.C)
    latent = rng.uniform(0.0, 1.0, size=shape)
    return instance_from_perf(perf, latent)


@dataclass(frozen=True)
class BiasRecord:
    """Estimated and true accuracy of the configuration a protocol returns."""

    protocol: str
    estimated_perf: float
    true_perf: float
    selected: int
    models_trained: int
    covered: bool | None = None

    @property
    def bias(self) -> float:
        return self.estimated_perf - self.true_perf


def simulate_ncv_on_matrix(instance: SimInstance, plan: FoldPlan) -> BiasRecord:
    """Nested CV emulated on a complete matrix.

    For each outer fold the inner selection runs on the remaining rows, whose
    predictions are exactly what an inner CV over the other folds would
    produce. The winner's loss on the outer fold is averaged over folds. The
    returned configuration is the winner on the whole matrix.
    """
    store = instance.store(plan)
    fold_losses = []
    for k in range(plan.K):
        inner = css(store, plan.train_indices(k), metric="zero-one").best_index
        test = plan.fold(k)
        fold_losses.append(1.0 - instance.correctness[test, inner].mean())
    winner = css(store, metric="zero-one").best_index
    return BiasRecord(
        "ncv",
        1.0 - float(np.mean(fold_losses)),
        float(instance.true_perf[winner]),
        winner,
        count_models("ncv", plan.K, instance.C),
    )


def _covers(ci_loss, p) -> bool:
    lb, ub = ci_loss
    return 1.0 - ub <= p <= 1.0 - lb


def run_replicate(
    setting: SimSetting,
    replicate: int,
    K: int = 10,
    B: int = 1000,
    alpha_drop: float = 0.99,
    min_oos: int = 50,
    alpha: float = 0.05,
    protocols=STUDY_PROTOCOLS,
) -> dict[str, BiasRecord]:
    if K > setting.N:
        raise ValueError(f"K={K} exceeds N={setting.N}")
    seeds = setting.seeds(replicate)
    inst = generate_instance(setting, replicate)
    plan = unstratified_fold_plan(setting.N, K, seed=seeds)
    store = inst.store(plan)
    P = inst.true_perf
    C = setting.C
    out = {}

    cvt = css(store, metric="zero-one")
    w = cvt.best_index
    if "cvt" in protocols:
        out["cvt"] = BiasRecord(
            "cvt", 1.0 - float(cvt.pooled_losses[w]), float(P[w]), w, count_models("cvt", K, C)
        )
    if "tt" in protocols:
        tt = tt_correct(store, "zero-one", winner=w)
        out["tt"] = BiasRecord("tt", 1.0 - tt.l_tt, float(P[w]), w, count_models("tt", K, C))
    if "ncv" in protocols:
        out["ncv"] = simulate_ncv_on_matrix(inst, plan)
    if "bbc" in protocols:
        res = bbc(store, "zero-one", B, alpha, seed=seeds)
        out["bbc"] = BiasRecord(
            "bbc", 1.0 - res.estimate, float(P[w]), w, count_models("bbc", K, C),
            _covers(res.ci, P[w]),
        )
    if "bced" in protocols:
        rep, _ = bced_on_store(store, plan, "zero-one", B, alpha_drop, min_oos, seeds, alpha)
        j = rep.selected_config
        out["bced"] = BiasRecord(
            "bced", 1.0 - rep.estimate_loss, float(P[j]), j, rep.models_trained,
            _covers(rep.ci, P[j]),
        )
    return out


@dataclass(frozen=True)
class BiasRow:
    """Aggregate over replicates for one (setting, protocol) pair."""

    N: int
    C: int
    beta_a: float
    beta_b: float
    mu: float
    latent: str
    protocol: str
    reps: int
    mean_bias: float
    se_bias: float
    mean_models: float
    coverage: float | None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class BiasStudy:
    settings: list
    K: int
    B: int
    alpha_drop: float
    min_oos: int
    protocols: tuple
    records: dict = field(default_factory=dict)  # setting index -> list of per-replicate dicts

    def values(self, setting: int, protocol: str, attr: str = "bias") -> np.ndarray:
        return np.array([getattr(r[protocol], attr) for r in self.records[setting]], dtype=float)

    def row(self, setting: int, protocol: str) -> BiasRow:
        s = self.settings[setting]
        bias = self.values(setting, protocol)
        n = bias.size
        se = float(bias.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
        covered = [r[protocol].covered for r in self.records[setting]]
        coverage = None if covered[0] is None else float(np.mean(covered))
        return BiasRow(
            s.N, s.C, s.beta_a, s.beta_b, s.mu, s.latent, protocol, n,
            float(bias.mean()), se,
            float(self.values(setting, protocol, "models_trained").mean()),
            coverage,
        )

    def table(self) -> list[BiasRow]:
        return [self.row(i, p) for i in range(len(self.settings)) for p in self.protocols]

    def find(self, N: int, C: int) -> int:
        for i, s in enumerate(self.settings):
            if s.N == N and s.C == C:
                return i
        raise KeyError((N, C))


def _job(args):
    setting, rep, kwargs = args
    return run_replicate(setting, rep, **kwargs)


def _workers(workers) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def run_bias_study(
    settings,
    K: int = 10,
    B: int = 1000,
    alpha_drop: float = 0.99,
    min_oos: int = 50,
    alpha: float = 0.05,
    protocols=STUDY_PROTOCOLS,
    workers: int | None = None,
    progress=None,
) -> BiasStudy:
    """Run every replicate of every setting and collect :class:`BiasRecord` s.

    Replicate seeds depend only on the setting and the replicate number, so
    results do not depend on ``workers`` (default: ``$BBCCV_WORKERS`` or 1).
    ``progress`` is called with ``(done, total)`` after each replicate.
    """
    settings = list(settings)
    for s in settings:
        if K > s.N:
            raise ValueError(f"setting N={s.N} is infeasible for K={K}")
    protocols = tuple(protocols)
    unknown = set(protocols) - set(STUDY_PROTOCOLS)
    if unknown:
        raise ValueError(f"unknown protocols {sorted(unknown)}")
    kwargs = dict(K=K, B=B, alpha_drop=alpha_drop, min_oos=min_oos, alpha=alpha, protocols=protocols)
    jobs = [(s, rep, kwargs) for s in settings for rep in range(s.reps)]
    n_workers = _workers(workers)
    if n_workers == 1:
        results = map(_job, jobs)
    else:
        pool = ProcessPoolExecutor(n_workers)
        results = pool.map(_job, jobs, chunksize=max(1, len(jobs) // (8 * n_workers)))
    study = BiasStudy(settings, K, B, alpha_drop, min_oos, protocols)
    index = {s: i for i, s in enumerate(settings)}
    try:
        for done, ((s, _, _), res) in enumerate(zip(jobs, results), 1):
            study.records.setdefault(index[s], []).append(res)
            if progress:
                progress(done, len(jobs))
    finally:
        if n_workers > 1:
            pool.shutdown()
    return study


SMOKE_GRID = dict(Ns=(20, 100, 500), Cs=(100, 500), betas=((9.0, 6.0),), reps=200)

FULL_GRID = dict(
    Ns=(20, 40, 60, 80, 100, 500, 1000),
    Cs=(50, 100, 200, 300, 500, 1000, 2000),
    betas=((9.0, 6.0), (14.0, 6.0), (24.0, 6.0), (54.0, 6.0)),
    reps=500,
)


def preset(
    name: str, seed: int = 0, reps: int | None = None, latent: str = "independent"
) -> list[SimSetting]:
    """Settings of the ``"smoke"`` or ``"full"`` grid."""
    grids = {"smoke": SMOKE_GRID, "full": FULL_GRID}
    if name not in grids:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(grids)}")
    g = grids[name]
    n_reps = g["reps"] if reps is None else reps
    return [
        SimSetting(N, C, a, b, n_reps, seed, latent)
        for (a, b) in g["betas"]
        for N in g["Ns"]
        for C in g["Cs"]
    ]
