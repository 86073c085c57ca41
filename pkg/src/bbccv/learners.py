"""Tiny deterministic learners and configuration grids.

The built-ins (majority, k-NN, logistic regression, decision stump) exist so
every protocol can run end to end in milliseconds with an auditable number of
trainings. Other learners can be plugged in with :func:`register_learner`.

Every call to :func:`train` bumps a process-wide counter, which tests use to
check the model counts reported by the protocols.
"""

from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, LearnerError

__all__ = [
    "ConfigGrid",
    "Configuration",
    "Dataset",
    "TrainedModel",
    "count_trainings",
    "expand_grid",
    "register_learner",
    "train",
    "training_count",
]


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``X`` (n x d) and labels ``y``.

    ``y`` holds class ids, real targets, or (time, event) rows for survival.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y))
        if X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        if X.shape[0] == 0:
            raise ValueError("empty dataset")

    def __len__(self):
        return self.X.shape[0]

    def take(self, rows) -> Dataset:
        return Dataset(self.X[rows], self.y[rows])


@dataclass(frozen=True)
class Configuration:
    """A learner name plus hyper-parameter values; hashable."""

    learner_id: str
    hyper_params: tuple = ()

    @classmethod
    def make(cls, learner_id: str, **params) -> Configuration:
        return cls(learner_id, tuple(params.items()))

    @property
    def params(self) -> dict:
        return dict(self.hyper_params)

    @property
    def id(self) -> str:
        if not self.hyper_params:
            return self.learner_id
        args = ",".join(f"{k}={v}" for k, v in self.hyper_params)
        return f"{self.learner_id}({args})"

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class ConfigGrid:
    configurations: tuple

    def __post_init__(self):
        configs = tuple(self.configurations)
        object.__setattr__(self, "configurations", configs)
        if not configs:
            raise GridError("a configuration grid cannot be empty")
        if len(set(configs)) != len(configs):
            raise GridError("duplicate configurations in grid")

    def __len__(self):
        return len(self.configurations)

    def __iter__(self):
        return iter(self.configurations)

    def __getitem__(self, i):
        return self.configurations[i]

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.configurations]


def expand_grid(blocks) -> ConfigGrid:
    """Cartesian product of hyper-parameter axes, learner block by learner block.

    ``blocks`` is a list of blocks (or a single block) such as
    ``{"learner": "knn", "params": {"k": [1, 3, 5]}}``. Within a block the
    first axis varies slowest.
    """
    if isinstance(blocks, dict) and "grid" in blocks:
        blocks = blocks["grid"]
    if isinstance(blocks, dict):
        blocks = [blocks]
    configs = []
    for block in blocks:
        try:
            learner = block["learner"]
        except (KeyError, TypeError):
            raise GridError(f"grid block without a learner: {block!r}") from None
        if learner not in _LEARNERS:
            raise GridError(f"unknown learner {learner!r}")
        axes = block.get("params", {}) or {}
        names = list(axes)
        values = []
        for name in names:
            axis = axes[name]
            if not isinstance(axis, (list, tuple)):
                axis = [axis]
            if len(axis) == 0:
                raise GridError(f"empty axis {name!r} for {learner}")
            if len(set(map(repr, axis))) != len(axis):
                raise GridError(f"duplicate values on axis {name!r} for {learner}")
            values.append(axis)
        for combo in itertools.product(*values):
            configs.append(Configuration(learner, tuple(zip(names, combo))))
    return ConfigGrid(configs)


# ---------------------------------------------------------------- counter

_counter_lock = threading.Lock()
_trainings = 0


def training_count() -> int:
    """Total number of :func:`train` calls in this process."""
    return _trainings


class _Tally:
    def __init__(self):
        self._start = training_count()

    @property
    def n(self) -> int:
        return training_count() - self._start


@contextmanager
def count_trainings():
    """``with count_trainings() as t: ...; t.n`` counts trainings in the block."""
    yield _Tally()


# ---------------------------------------------------------------- models


@dataclass
class TrainedModel:
    """Fitted parameters plus a predict function.

    ``predict(X, kind)`` returns labels (``"label"``), positive-class scores
    (``"score"``), real values (``"value"``) or risk scores (``"risk"``,
    the negated predicted survival time).
    """

    learner_id: str
    params: dict
    _predict: object = field(repr=False)
    n_features: int = 0
    degenerate: bool = False

    def predict(self, X, kind: str = "label") -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.n_features:
            raise LearnerError(
                f"model trained on {self.n_features} features, got {X.shape[1]}"
            )
        if kind == "risk":
            return -np.asarray(self._predict(X, "value"), dtype=float)
        return np.asarray(self._predict(X, kind))


def _vote(labels: np.ndarray) -> float:
    """Most frequent label; ties go to the lowest class id."""
    classes, counts = np.unique(labels, return_counts=True)
    return classes[np.argmax(counts)]


def _fit_majority(X, y, task):
    label = _vote(y) if task == "classification" else None
    prior = float(np.mean(y == 1)) if task == "classification" else None
    mean = float(np.mean(y.astype(float)))

    def predict(Xq, kind):
        n = Xq.shape[0]
        if kind == "label":
            return np.full(n, label)
        if kind == "score":
            return np.full(n, prior)
        return np.full(n, mean)

    return predict, False


def _fit_knn(X, y, task, k=1, distance="euclidean"):
    k = int(k)
    if k < 1:
        raise LearnerError("k must be positive")
    k = min(k, X.shape[0])
    if distance not in ("euclidean", "manhattan"):
        raise LearnerError(f"unknown distance {distance!r}")
    Xt = X.copy()
    yt = y.copy()

    def neighbours(Xq):
        diff = Xq[:, None, :] - Xt[None, :, :]
        if distance == "euclidean":
            d = np.sqrt((diff**2).sum(axis=2))
        else:
            d = np.abs(diff).sum(axis=2)
        # stable sort: equal distances resolve to the lowest training row
        return np.argsort(d, axis=1, kind="stable")[:, :k]

    def predict(Xq, kind):
        nn = yt[neighbours(Xq)]
        if kind == "label":
            return np.array([_vote(row) for row in nn])
        if kind == "score":
            return (nn == 1).mean(axis=1)
        return nn.astype(float).mean(axis=1)

    return predict, False


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _fit_logistic(X, y, task, l2=0.0, learning_rate=0.1, iterations=100):
    classes = np.unique(y)
    if len(classes) < 2:
        predict, _ = _fit_majority(X, y, "classification")
        return predict, True
    if not set(classes.tolist()) <= {0, 1}:
        raise LearnerError("logistic regression needs labels in {0, 1}")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    t = y.astype(float)
    w = np.zeros(Z.shape[1])
    b = 0.0
    n = Z.shape[0]
    for _ in range(int(iterations)):
        p = _sigmoid(Z @ w + b)
        g = p - t
        w -= learning_rate * (Z.T @ g / n + l2 * w)
        b -= learning_rate * g.mean()

    def predict(Xq, kind):
        p = _sigmoid(((Xq - mu) / sd) @ w + b)
        if kind == "score":
            return p
        if kind == "label":
            return (p > 0.5).astype(int)
        return p

    return predict, False


def _fit_stump(X, y, task, min_leaf=1):
    """Best single-feature threshold split (0-1 error or squared error)."""
    min_leaf = int(min_leaf)
    d = X.shape[1]

    def leaf(values):
        if task == "classification":
            return _vote(values), float(np.mean(values == 1)), float(np.mean(values.astype(float)))
        m = float(np.mean(values.astype(float)))
        return m, m, m

    def cost(values):
        if task == "classification":
            return float(np.sum(values != _vote(values)))
        v = values.astype(float)
        return float(np.sum((v - v.mean()) ** 2))

    best = (cost(y), -1, 0.0)
    for f in range(d):
        thresholds = np.unique(X[:, f])
        for lo, hi in zip(thresholds[:-1], thresholds[1:]):
            cut = (lo + hi) / 2.0
            left = X[:, f] <= cut
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            c = cost(y[left]) + cost(y[~left])
            if c < best[0]:
                best = (c, f, cut)
    _, feature, cut = best
    if feature < 0:
        whole = leaf(y)
        sides = (whole, whole)
    else:
        left = X[:, feature] <= cut
        sides = (leaf(y[left]), leaf(y[~left]))

    slot = {"label": 0, "score": 1, "value": 2}

    def predict(Xq, kind):
        i = slot[kind]
        if feature < 0:
            return np.full(Xq.shape[0], sides[0][i])
        go_left = Xq[:, feature] <= cut
        return np.where(go_left, sides[0][i], sides[1][i])

    return predict, False


_LEARNERS = {
    "majority": _fit_majority,
    "knn": _fit_knn,
    "logistic": _fit_logistic,
    "linear-logistic": _fit_logistic,
    "stump": _fit_stump,
}


def register_learner(name: str, fit, replace: bool = False):
    """Add a learner.

    ``fit(X, y, task, **hyper_params)`` must return ``(predict, degenerate)``
    where ``predict(X, kind)`` follows :meth:`TrainedModel.predict`.
    """
    if name in _LEARNERS and not replace:
        raise ValueError(f"learner {name!r} already registered")
    _LEARNERS[name] = fit


def train(config: Configuration, data: Dataset, task: str = "classification") -> TrainedModel:
    """Fit ``config`` on ``data``.

    ``task`` is ``"classification"`` or ``"regression"``; survival labels are
    trained as regression on the time column.
    """
    global _trainings
    with _counter_lock:
        _trainings += 1
    try:
        fit = _LEARNERS[config.learner_id]
    except KeyError:
        raise LearnerError(f"unknown learner {config.learner_id!r}") from None
    y = data.y
    if y.ndim == 2:
        y = y[:, 0].astype(float)
        task = "regression"
    predict, degenerate = fit(data.X, y, task, **config.params)
    return TrainedModel(
        config.learner_id, config.params, predict, n_features=data.X.shape[1], degenerate=degenerate
    )
