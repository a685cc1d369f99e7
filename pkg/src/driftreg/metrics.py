"""Evaluation metrics, fold planning, and cross-dataset ranking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import make_generator


class UndefinedMetricError(ValueError):
    """The metric is not defined for this input (e.g. zero target variance)."""


@dataclass(frozen=True)
class MetricReport:
    r2: float
    mse: float
    n: int
    r2_defined: bool = True


def mse(y_true, y_pred) -> float:
    yt = np.asarray(y_true, dtype=np.float64)
    yp = np.asarray(y_pred, dtype=np.float64)
    if yt.shape != yp.shape or yt.ndim != 1 or yt.size < 1:
        raise ValueError("mse expects two equal-length 1-d arrays")
    return float(np.mean((yt - yp) ** 2))


def r_squared(y_true, y_pred) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot, range (-inf, 1]."""
    yt = np.asarray(y_true, dtype=np.float64)
    yp = np.asarray(y_pred, dtype=np.float64)
    if yt.shape != yp.shape or yt.ndim != 1:
        raise ValueError("r_squared expects two equal-length 1-d arrays")
    if yt.size < 2:
        raise UndefinedMetricError("r_squared needs at least 2 samples")
    ss_tot = float(np.sum((yt - yt.mean()) ** 2))
    if ss_tot <= 0.0:
        raise UndefinedMetricError("target variance is zero")
    ss_res = float(np.sum((yt - yp) ** 2))
    return 1.0 - ss_res / ss_tot


def r_squared_or_zero(y_true, y_pred) -> tuple[float, bool]:
    """r_squared, substituting a flagged 0.0 where the metric is undefined."""
    try:
        return r_squared(y_true, y_pred), True
    except UndefinedMetricError:
        return 0.0, False


def evaluate(y_true, y_pred) -> MetricReport:
    r2, defined = r_squared_or_zero(y_true, y_pred)
    return MetricReport(
        r2=r2, mse=mse(y_true, y_pred), n=int(np.asarray(y_true).size),
        r2_defined=defined,
    )


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignments: np.ndarray

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)


def kfold(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle, then contiguous fold assignment.

    Fold sizes differ by at most one; the first ``n % k`` folds take the
    extra row. Identical (n, k, seed) always yields the same plan.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"need at least k={k} rows, got {n}")
    order = make_generator(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    base, extra = divmod(n, k)
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        assignments[order[start : start + size]] = fold
        start += size
    return FoldPlan(k=k, seed=seed, assignments=assignments)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    count: int


def seed_average(values) -> SummaryStats:
    """Arithmetic mean and population standard deviation of cell metrics."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size < 1:
        raise ValueError("seed_average needs at least one value")
    return SummaryStats(
        mean=float(arr.mean()), std=float(arr.std()), count=int(arr.size)
    )


def rank_with_ties(values) -> list[float]:
    """Ascending ranks, 1 = best (smallest); ties share the mean rank."""
    arr = np.asarray(list(values), dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.float64)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for p in range(i, j + 1):
            ranks[order[p]] = mean_rank
        i = j + 1
    return ranks.tolist()


@dataclass(frozen=True)
class RankTable:
    algorithms: list[str]
    datasets: list[str]
    mse_by_dataset: dict[str, dict[str, float]]
    ranks_by_dataset: dict[str, dict[str, float]]
    average_rank: dict[str, float]


def average_rank(mse_by_dataset: dict[str, dict[str, float]]) -> RankTable:
    """Per-dataset ascending MSE ranks and their per-algorithm average.

    Every dataset must report the same algorithm set.
    """
    datasets = sorted(mse_by_dataset)
    if not datasets:
        raise ValueError("rank table needs at least one dataset")
    algorithms = sorted(mse_by_dataset[datasets[0]])
    for name in datasets:
        if sorted(mse_by_dataset[name]) != algorithms:
            raise ValueError(f"dataset {name!r} reports a different algorithm set")
    ranks_by_dataset: dict[str, dict[str, float]] = {}
    totals = {algo: 0.0 for algo in algorithms}
    for name in datasets:
        ranks = rank_with_ties([mse_by_dataset[name][algo] for algo in algorithms])
        ranks_by_dataset[name] = dict(zip(algorithms, ranks))
        for algo, rank in zip(algorithms, ranks):
            totals[algo] += rank
    avg = {algo: totals[algo] / len(datasets) for algo in algorithms}
    return RankTable(
        algorithms=algorithms,
        datasets=datasets,
        mse_by_dataset={d: dict(mse_by_dataset[d]) for d in datasets},
        ranks_by_dataset=ranks_by_dataset,
        average_rank=avg,
    )
