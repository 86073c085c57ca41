"""Seeded fold plans, bootstrap draws and percentile intervals.

Every random quantity in the package comes from :class:`SeedPlan`. A stream is
identified by a master seed, a purpose tag and integer counters; the three are
fed to :class:`numpy.random.SeedSequence` as ``entropy=master_seed`` and
``spawn_key=(crc32(tag), *counters)``. Anyone holding the seed can rebuild the
exact same draws with numpy alone.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ResamplingError

__all__ = [
    "BootstrapDraw",
    "FoldPlan",
    "MAX_REDRAWS",
    "SeedPlan",
    "bootstrap_draw",
    "bootstrap_indices",
    "bootstrap_weights",
    "percentile_ci",
    "percentile_ranks",
    "stratified_fold_plan",
    "unstratified_fold_plan",
]

MAX_REDRAWS = 100


@dataclass(frozen=True)
class SeedPlan:
    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    def sequence(self, tag: str, *counters: int) -> np.random.SeedSequence:
        key = (zlib.crc32(tag.encode()),) + tuple(int(c) for c in counters)
        return np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=key)

    def stream(self, tag: str, *counters: int) -> np.random.Generator:
        """Independent generator for ``(tag, *counters)``."""
        return np.random.Generator(np.random.PCG64(self.sequence(tag, *counters)))

    def derive(self, tag: str, *counters: int) -> SeedPlan:
        """Child plan whose master seed is drawn from ``(tag, *counters)``."""
        return SeedPlan(int(self.sequence(tag, *counters).generate_state(1, np.uint64)[0]))


def _as_seed_plan(seed) -> SeedPlan:
    return seed if isinstance(seed, SeedPlan) else SeedPlan(int(seed))


def _rng_for(seed, tag: str, *counters: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return _as_seed_plan(seed).stream(tag, *counters)


@dataclass(frozen=True)
class FoldPlan:
    """Partition of ``range(N)`` into ``K`` folds; ``assignment[i]`` is 0-based."""

    K: int
    assignment: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)
        if a.ndim != 1 or a.size == 0:
            raise ResamplingError("fold assignment must be a non-empty vector")
        if a.min() < 0 or a.max() >= self.K:
            raise ResamplingError("fold id out of range")
        if np.bincount(a, minlength=self.K).min() == 0:
            raise ResamplingError("every fold must be non-empty")

    @property
    def n_samples(self) -> int:
        return self.assignment.shape[0]

    def fold(self, k: int) -> np.ndarray:
        """Sorted sample indices held out in fold ``k``."""
        return np.flatnonzero(self.assignment == k)

    def folds(self) -> list[np.ndarray]:
        return [self.fold(k) for k in range(self.K)]

    def train_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != k)

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)

    def restrict(self, rows: np.ndarray) -> tuple[FoldPlan, np.ndarray]:
        """Plan induced on ``rows`` with folds renumbered consecutively.

        Returns the new plan (indexed by position in ``rows``) and the original
        fold id of each new fold.
        """
        rows = np.asarray(rows)
        sub = self.assignment[rows]
        kept, renumbered = np.unique(sub, return_inverse=True)
        return FoldPlan(len(kept), renumbered), kept


def _is_discrete(labels: np.ndarray) -> bool:
    if labels.dtype.kind in "biuUSO":
        return True
    return bool(np.all(np.isfinite(labels)) and np.all(labels == np.round(labels)))


def _deal(groups: list[np.ndarray], K: int, rng: np.random.Generator, n: int) -> FoldPlan:
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for members in groups:
        members = rng.permutation(members)
        assignment[members] = (offset + np.arange(members.size)) % K
        offset += members.size
    return FoldPlan(K, assignment)


def _check_k(n: int, K: int):
    if n == 0:
        raise ResamplingError("empty labels")
    if K < 2:
        raise ResamplingError("K must be at least 2")
    if K > n:
        raise ResamplingError(f"K exceeds N ({K} > {n})")


def stratified_fold_plan(
    labels, K: int, seed=0, stratify: bool | None = None, repeat: int = 0
) -> FoldPlan:
    """Shuffle each class and deal its members round-robin to ``K`` folds.

    The dealing position carries over from one class to the next (classes in
    ascending order), so fold sizes differ by at most one overall and within
    every class. Survival labels of shape ``(n, 2)`` are stratified on the event
    indicator. Continuous labels cannot be stratified and are shuffled as one
    group; ``stratify=None`` picks automatically.

    ``seed`` is a master seed, a :class:`SeedPlan` or a ready generator; the
    first two use the ``("fold-plan", K, repeat)`` stream.
    """
    labels = np.asarray(labels)
    if labels.ndim == 2 and labels.shape[1] == 2:
        labels = labels[:, 1]
    n = labels.shape[0]
    _check_k(n, K)
    if stratify is None:
        stratify = _is_discrete(labels)
    rng = _rng_for(seed, "fold-plan", K, repeat)
    if stratify:
        classes = np.unique(labels)
        groups = [np.flatnonzero(labels == c) for c in classes]
    else:
        groups = [np.arange(n)]
    return _deal(groups, K, rng, n)


def unstratified_fold_plan(n: int, K: int, seed=0, repeat: int = 0) -> FoldPlan:
    _check_k(n, K)
    rng = _rng_for(seed, "fold-plan", K, repeat)
    return _deal([np.arange(n)], K, rng, n)


@dataclass(frozen=True)
class BootstrapDraw:
    in_bag: np.ndarray
    out_bag: np.ndarray


def bootstrap_draw(n: int, rng: np.random.Generator) -> BootstrapDraw:
    """Draw ``n`` indices with replacement; redraw while the out-of-bag set is empty."""
    if n < 2:
        raise ResamplingError("bootstrap needs N >= 2 to leave an out-of-bag sample")
    for _ in range(MAX_REDRAWS):
        in_bag = rng.integers(0, n, size=n)
        seen = np.zeros(n, dtype=bool)
        seen[in_bag] = True
        if not seen.all():
            return BootstrapDraw(in_bag, np.flatnonzero(~seen))
    raise ResamplingError(f"no draw with a non-empty out-of-bag set after {MAX_REDRAWS} attempts")


def bootstrap_indices(n: int, B: int, rng: np.random.Generator, valid=None) -> np.ndarray:
    """``B`` bootstrap draws of ``n`` indices as a ``(B, n)`` array.

    Draws are generated in one block from ``rng``. ``valid`` maps the
    ``(B, n)`` block to a boolean vector; every rejected row is redrawn from
    the same stream, in row order, at most :data:`MAX_REDRAWS` times.
    """
    if n < 1 or B < 1:
        raise ResamplingError("bootstrap needs n >= 1 and B >= 1")
    idx = rng.integers(0, n, size=(B, n))
    if valid is None:
        return idx
    bad = np.flatnonzero(~np.asarray(valid(idx), dtype=bool))
    for _ in range(MAX_REDRAWS):
        if bad.size == 0:
            return idx
        idx[bad] = rng.integers(0, n, size=(bad.size, n))
        bad = bad[~np.asarray(valid(idx[bad]), dtype=bool)]
    if bad.size == 0:
        return idx
    raise ResamplingError(f"bootstrap redraw bound ({MAX_REDRAWS}) exhausted")


def bootstrap_weights(idx: np.ndarray, n: int) -> np.ndarray:
    """Multiplicity of each of the ``n`` rows in every draw of ``idx``."""
    B = idx.shape[0]
    flat = (idx + n * np.arange(B)[:, None]).ravel()
    return np.bincount(flat, minlength=B * n).reshape(B, n)


def percentile_ranks(B: int, alpha: float) -> tuple[int, int]:
    """1-based order-statistic ranks used by :func:`percentile_ci`."""
    lo = math.floor(alpha / 2 * B + 1e-9)
    hi = math.ceil((1 - alpha / 2) * B - 1e-9)
    return max(1, lo), min(B, hi)


def percentile_ci(values, alpha: float = 0.05) -> tuple[float, float]:
    """Percentile interval ``[b_(floor(a/2 B)), b_(ceil((1-a/2) B))]``."""
    values = np.asarray(values, dtype=float)
    B = values.shape[0]
    if B < 20:
        raise ResamplingError(f"percentile CI needs at least 20 values, got {B}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if not np.isfinite(values).all():
        raise ValueError("non-finite bootstrap values")
    lo, hi = percentile_ranks(B, alpha)
    ordered = np.sort(values)
    return float(ordered[lo - 1]), float(ordered[hi - 1])
