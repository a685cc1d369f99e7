"""Experiment execution: cells, protocols, and deterministic result files.

A benchmark run is a cross product of (algorithm x seed x fold) cells over
one dataset. Training folds are streamed in their original order as
mini-batches of a common size K = max(U, M * Z+); learners declared
strict-streaming consume each batch exactly once, while the
gradient-descent family replays the retained stream for a configured
number of epochs with per-epoch seeded shuffling. Four protocols share
this machinery:

``final``        hold-out metrics after the stream is exhausted.
``prequential``  test-then-train scoring of every incoming batch, with
                 drift events captured from the adaptive learner.
``convergence``  fresh prefix models evaluated at checkpoint sample counts.
``early_mse``    hold-out MSE after each of the first few batches,
                 averaged; the input for cross-dataset ranking.

Identical spec plus package version yields byte-identical summary files;
wall-clock data lives in a separate metadata file.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .adaptive import AdaptationMode, AdaptiveAveragingRegressor, window_capacity
from .averaging import AveragingRegressor, suggested_base_rows
from .baselines import BASELINE_ALGORITHMS, DivergenceError
from .datagen import LoadedDataset, StreamSpec, generate, load_csv
from .metrics import MetricReport, average_rank, evaluate, kfold, mse, seed_average
from .rng import make_generator

SCHEMA_VERSION = 1

AVERAGING_ALGORITHMS = ("wavg", "wavg_adaptive")
REPLAY_ALGORITHMS = ("sgd", "mbgd", "ridge", "lasso")

# Defaults mirroring the benchmark configuration the suites are run with.
DEFAULT_PROTOCOL = {
    "mode": "final",
    "folds": 5,
    "seeds": 5,
    "batch_zplus": 5,
    "batch_size": None,
    "batch_user_min": 1,
    "epochs_zplus": 2,
    "base_fraction": 0.1,
    "base_batches": None,
    "base_rows": None,
    "eval_segment": None,
    "checkpoints": None,
    "first_batches": 10,
    "n_recent": None,
    "window_delta": 0.05,
}


class SpecValidationError(ValueError):
    """Malformed experiment specification; message names the field."""


def mini_batch_size(m: int, z_plus: int = 5, user_min: int = 1) -> int:
    """Common per-step batch size K = max(U, M * Z+)."""
    if m < 1 or z_plus < 1 or user_min < 1:
        raise ValueError("m, z_plus, and user_min must be >= 1")
    return max(user_min, m * z_plus)


@dataclass(frozen=True)
class Protocol:
    mode: str
    folds: int
    seeds: tuple[int, ...]
    batch_zplus: int
    batch_size: int | None
    batch_user_min: int
    epochs_zplus: int
    base_fraction: float
    base_batches: int | None
    base_rows: int | None
    eval_segment: str | None
    checkpoints: tuple[int, ...] | None
    first_batches: int
    n_recent: int | None
    window_delta: float

    @classmethod
    def from_dict(cls, doc: dict) -> "Protocol":
        merged = dict(DEFAULT_PROTOCOL)
        unknown = set(doc) - set(merged)
        if unknown:
            raise SpecValidationError(f"protocol: unknown fields {sorted(unknown)}")
        merged.update(doc)
        seeds = merged["seeds"]
        if isinstance(seeds, int):
            if seeds < 1:
                raise SpecValidationError("protocol.seeds: need at least one seed")
            seeds = tuple(range(seeds))
        else:
            seeds = tuple(int(s) for s in seeds)
        mode = merged["mode"]
        if mode not in ("final", "prequential", "convergence", "early_mse"):
            raise SpecValidationError(f"protocol.mode: unknown mode {mode!r}")
        folds = int(merged["folds"])
        if folds < 1:
            raise SpecValidationError("protocol.folds: must be >= 1")
        if folds == 1 and mode != "prequential":
            raise SpecValidationError(
                "protocol.folds: 1 (no hold-out) is only valid for prequential runs"
            )
        checkpoints = merged["checkpoints"]
        if checkpoints is not None:
            checkpoints = tuple(int(c) for c in checkpoints)
            if any(c < 1 for c in checkpoints) or list(checkpoints) != sorted(checkpoints):
                raise SpecValidationError(
                    "protocol.checkpoints: must be an increasing list of counts"
                )
        if mode == "convergence" and checkpoints is None:
            raise SpecValidationError("protocol.checkpoints: required for convergence")
        return cls(
            mode=mode,
            folds=folds,
            seeds=seeds,
            batch_zplus=int(merged["batch_zplus"]),
            batch_size=merged["batch_size"],
            batch_user_min=int(merged["batch_user_min"]),
            epochs_zplus=int(merged["epochs_zplus"]),
            base_fraction=float(merged["base_fraction"]),
            base_batches=merged["base_batches"],
            base_rows=merged["base_rows"],
            eval_segment=merged["eval_segment"],
            checkpoints=checkpoints,
            first_batches=int(merged["first_batches"]),
            n_recent=merged["n_recent"],
            window_delta=float(merged["window_delta"]),
        )


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    dataset: dict
    algorithms: tuple[dict, ...]
    protocol: Protocol

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise SpecValidationError(
                f"schema_version: expected {SCHEMA_VERSION}, got {doc.get('schema_version')}"
            )
        name = doc.get("name")
        if not name or not isinstance(name, str):
            raise SpecValidationError("name: required non-empty string")
        dataset = doc.get("dataset")
        if not isinstance(dataset, dict) or "kind" not in dataset:
            raise SpecValidationError("dataset: required object with a 'kind' field")
        algorithms = doc.get("algorithms")
        if not algorithms:
            raise SpecValidationError("algorithms: need at least one algorithm")
        known = set(BASELINE_ALGORITHMS) | set(AVERAGING_ALGORITHMS)
        normalized = []
        for i, algo in enumerate(algorithms):
            if isinstance(algo, str):
                algo = {"name": algo}
            if algo.get("name") not in known:
                raise SpecValidationError(
                    f"algorithms[{i}].name: unknown algorithm {algo.get('name')!r}"
                )
            normalized.append({"name": algo["name"], "params": dict(algo.get("params", {}))})
        protocol = Protocol.from_dict(doc.get("protocol", {}))
        if dataset["kind"] != "csv":
            try:
                StreamSpec.from_dict(dataset)
            except (TypeError, ValueError) as exc:
                raise SpecValidationError(f"dataset: {exc}") from exc
        return cls(
            name=name,
            dataset=dict(dataset),
            algorithms=tuple(normalized),
            protocol=protocol,
        )


@dataclass
class Dataset:
    """Materialized rows plus optional segment ground truth."""

    x: np.ndarray
    y: np.ndarray
    segments: np.ndarray | None = None
    drift_points: list[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]


def materialize_dataset(dataset_doc: dict, seed_offset: int) -> Dataset:
    """Dataset rows for one experiment seed.

    Synthetic datasets are regenerated with the spec seed shifted by the
    experiment seed; CSV datasets are fixed and only the fold shuffling
    varies across seeds.
    """
    doc = dict(dataset_doc)
    kind = doc.pop("kind")
    if kind == "csv":
        loaded: LoadedDataset = load_csv(
            doc["path"], target=doc.get("target"), normalize=doc.get("normalize")
        )
        return Dataset(x=loaded.x, y=loaded.y)
    spec = StreamSpec.from_dict({"kind": kind, **doc})
    stream = generate(spec.with_seed(spec.seed + seed_offset))
    x, y = stream.arrays()
    return Dataset(
        x=x,
        y=y,
        segments=stream.segment_of_rows(),
        drift_points=stream.drift_points,
    )


def _batch_slices(n: int, k: int) -> list[slice]:
    """Consecutive batches of size k; a short remainder is folded into the
    final batch so no learner ever sees an underdetermined tail fit."""
    slices = [slice(start, min(start + k, n)) for start in range(0, n, k)]
    if len(slices) > 1 and (slices[-1].stop - slices[-1].start) < k:
        slices[-2] = slice(slices[-2].start, n)
        slices.pop()
    return slices


def _resolve_base_rows(protocol: Protocol, n_train: int, k: int, m: int) -> int:
    if protocol.base_rows is not None:
        rows = int(protocol.base_rows)
    elif protocol.base_batches is not None:
        rows = int(protocol.base_batches) * k
    else:
        rows = suggested_base_rows(m, n_train, protocol.base_fraction)
    return max(1, min(rows, n_train))


def _build_learner(name: str, params: dict, m: int, protocol: Protocol, n_total: int, k: int):
    if name == "wavg":
        return AveragingRegressor(m, alpha=params.get("alpha", 0.5))
    if name == "wavg_adaptive":
        n_recent = protocol.n_recent if protocol.n_recent is not None else n_total
        capacity = window_capacity(n_recent, k, protocol.window_delta)
        mode = AdaptationMode(params.get("mode", "time_based"))
        return AdaptiveAveragingRegressor(
            m,
            alpha=params.get("alpha", 0.5),
            z=params.get("z", 2.0),
            capacity=capacity,
            kpi_selector=params.get("kpi", "r2"),
            mode=mode,
        )
    info = BASELINE_ALGORITHMS[name]
    defaults = dict(info.defaults)
    defaults.update(params)
    return info.factory(m, **defaults)


def _train_replay(learner, x, y, k: int, epochs: int, shuffle_seed: int) -> None:
    """Multi-epoch training over retained data with per-epoch shuffling."""
    gen = make_generator(shuffle_seed)
    per_sample = learner.name not in ("mbgd",)
    for _ in range(max(1, epochs)):
        order = gen.permutation(y.shape[0])
        xs, ys = x[order], y[order]
        if per_sample:
            learner.observe(xs, ys)
        else:
            for sl in _batch_slices(ys.shape[0], k):
                learner.observe(xs[sl], ys[sl])


def _train_stream(
    learner,
    name: str,
    x: np.ndarray,
    y: np.ndarray,
    k: int,
    protocol: Protocol,
    shuffle_seed: int,
    score_test=None,
    prequential: bool = False,
):
    """Drive one learner over the training rows; returns trace events."""
    events: list[dict] = []
    n_train = y.shape[0]

    def record_scores(batch_index: int) -> None:
        if score_test is not None:
            events.append({"type": "checkpoint", "batch_index": batch_index,
                           "mse": score_test(learner)})

    if name in AVERAGING_ALGORITHMS:
        base_rows = _resolve_base_rows(protocol, n_train, k, x.shape[1])
        learner.init_base(x[:base_rows], y[:base_rows])
        record_scores(-1)
        batch_index = 0
        for sl in _batch_slices(n_train - base_rows, k):
            xs = x[base_rows:][sl]
            ys = y[base_rows:][sl]
            if prequential:
                events.append(_prequential_event(learner, xs, ys, batch_index))
            if name == "wavg_adaptive":
                _, assessment = learner.partial_fit(xs, ys)
                if assessment is not None:
                    events.append({"type": "assessment", **assessment.to_record()})
            else:
                learner.partial_fit(xs, ys)
            record_scores(batch_index)
            batch_index += 1
        return events

    if name == "batch":
        learner.observe(x, y)
        learner.finalize()
        record_scores(-1)
        return events

    if name in REPLAY_ALGORITHMS and not prequential and score_test is None:
        _train_replay(learner, x, y, k, protocol.epochs_zplus, shuffle_seed)
        return events

    # Streaming pass, one batch at a time. Replay learners asked for
    # per-batch checkpoints are retrained on the growing prefix so their
    # epoch budget applies at every checkpoint.
    batch_index = 0
    for sl in _batch_slices(n_train, k):
        xs, ys = x[sl], y[sl]
        if prequential:
            events.append(_prequential_event(learner, xs, ys, batch_index))
        if name in REPLAY_ALGORITHMS and score_test is not None:
            learner.__init__(learner.num_features, **learner.hyperparameters())
            _train_replay(
                learner, x[: sl.stop], y[: sl.stop], k, protocol.epochs_zplus, shuffle_seed
            )
        else:
            learner.observe(xs, ys)
        record_scores(batch_index)
        batch_index += 1
    return events


def _prequential_event(learner, xs, ys, batch_index: int) -> dict:
    report = evaluate(ys, learner.predict(xs))
    return {
        "type": "prequential",
        "batch_index": batch_index,
        "r2": report.r2,
        "mse": report.mse,
    }


@dataclass
class CellResult:
    dataset: str
    algorithm: str
    seed: int
    fold: int
    report: MetricReport | None
    diverged: bool
    events: list[dict] = field(default_factory=list)
    early_mse: float | None = None
    checkpoints: dict[int, float] | None = None
    drift_batches: list[int] = field(default_factory=list)
    runtime: float = 0.0


def run_cell(
    spec: ExperimentSpec,
    algorithm: dict,
    seed: int,
    fold: int,
    data: Dataset | None = None,
) -> CellResult:
    """Train and score one (algorithm, seed, fold) cell."""
    protocol = spec.protocol
    started = time.perf_counter()
    if data is None:
        data = materialize_dataset(spec.dataset, seed)
    name = algorithm["name"]
    params = algorithm.get("params", {})

    if protocol.folds > 1:
        plan = kfold(data.n, protocol.folds, seed=seed * 7919 + 17)
        train_idx = plan.train_indices(fold)
        test_idx = plan.test_indices(fold)
    else:
        train_idx = np.arange(data.n)
        test_idx = np.empty(0, dtype=np.int64)

    if protocol.eval_segment is not None and data.segments is not None:
        target_segment = (
            data.segments.min() if protocol.eval_segment == "first" else data.segments.max()
        )
        test_idx = test_idx[data.segments[test_idx] == target_segment]

    x_train, y_train = data.x[train_idx], data.y[train_idx]
    x_test, y_test = data.x[test_idx], data.y[test_idx]

    k = protocol.batch_size or mini_batch_size(
        data.m, protocol.batch_zplus, protocol.batch_user_min
    )
    shuffle_seed = seed * 1000003 + fold
    cell = CellResult(
        dataset=spec.name, algorithm=name, seed=seed, fold=fold,
        report=None, diverged=False,
    )
    if data.drift_points and protocol.folds == 1:
        base_rows = (
            _resolve_base_rows(protocol, y_train.shape[0], k, data.m)
            if name in AVERAGING_ALGORITHMS
            else 0
        )
        cell.drift_batches = [
            max(0, (p - base_rows)) // k for p in data.drift_points
        ]

    try:
        learner = _build_learner(name, params, data.m, protocol, data.n, k)
        if protocol.mode == "convergence":
            cell.checkpoints = {}
            for count in protocol.checkpoints:
                count = min(count, y_train.shape[0])
                fresh = _build_learner(name, params, data.m, protocol, data.n, k)
                _train_stream(
                    fresh, name, x_train[:count], y_train[:count], k, protocol, shuffle_seed
                )
                model = fresh
                report = evaluate(y_test, model.predict(x_test))
                cell.checkpoints[count] = report.r2
            _train_stream(learner, name, x_train, y_train, k, protocol, shuffle_seed)
            cell.report = evaluate(y_test, learner.predict(x_test))
        elif protocol.mode == "early_mse":
            limit = protocol.first_batches * k
            scores: list[float] = []

            def score_test(model) -> float:
                value = mse(y_test, model.predict(x_test))
                scores.append(value)
                return value

            _train_stream(
                learner,
                name,
                x_train[:limit],
                y_train[:limit],
                k,
                protocol,
                shuffle_seed,
                score_test=score_test,
            )
            # With base_batches = 1 the averaging learner's post-init score
            # is its iteration-1 checkpoint, keeping iteration counts
            # aligned across learners.
            per_batch = scores[: protocol.first_batches]
            cell.early_mse = float(np.mean(per_batch))
            cell.report = evaluate(y_test, learner.predict(x_test))
        elif protocol.mode == "prequential":
            events = _train_stream(
                learner, name, x_train, y_train, k, protocol, shuffle_seed,
                prequential=True,
            )
            cell.events = events
            scored = [e for e in events if e["type"] == "prequential"]
            if test_idx.size:
                cell.report = evaluate(y_test, learner.predict(x_test))
            elif scored:
                cell.report = MetricReport(
                    r2=float(np.mean([e["r2"] for e in scored])),
                    mse=float(np.mean([e["mse"] for e in scored])),
                    n=len(scored),
                )
        else:
            _train_stream(learner, name, x_train, y_train, k, protocol, shuffle_seed)
            cell.report = evaluate(y_test, learner.predict(x_test))
    except DivergenceError:
        cell.diverged = True
    cell.runtime = time.perf_counter() - started
    return cell


def _cell_worker(args) -> CellResult:
    spec_doc, algorithm, seed, fold = args
    return run_cell(ExperimentSpec.from_dict(spec_doc), algorithm, seed, fold)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    cells: list[CellResult]

    def summary_doc(self) -> dict:
        algorithms = sorted({c.algorithm for c in self.cells})
        summary: dict[str, Any] = {}
        for algo in algorithms:
            done = [c for c in self.cells if c.algorithm == algo and not c.diverged]
            entry: dict[str, Any] = {
                "cells": len([c for c in self.cells if c.algorithm == algo]),
                "diverged": len(
                    [c for c in self.cells if c.algorithm == algo and c.diverged]
                ),
            }
            if done and done[0].report is not None:
                r2_stats = seed_average([c.report.r2 for c in done])
                mse_stats = seed_average([c.report.mse for c in done])
                entry.update(
                    r2_mean=r2_stats.mean,
                    r2_std=r2_stats.std,
                    mse_mean=mse_stats.mean,
                    mse_std=mse_stats.std,
                )
            if done and done[0].early_mse is not None:
                entry["early_mse_mean"] = seed_average(
                    [c.early_mse for c in done]
                ).mean
            if done and done[0].checkpoints is not None:
                counts = sorted(done[0].checkpoints)
                entry["convergence_r2"] = {
                    str(count): seed_average(
                        [c.checkpoints[count] for c in done if count in c.checkpoints]
                    ).mean
                    for count in counts
                }
            summary[algo] = entry
        doc = {
            "schema_version": SCHEMA_VERSION,
            "name": self.spec.name,
            "protocol_mode": self.spec.protocol.mode,
            "algorithms": algorithms,
            "summary": summary,
            "cells": [
                {
                    "algorithm": c.algorithm,
                    "seed": c.seed,
                    "fold": c.fold,
                    "diverged": c.diverged,
                    "r2": None if c.report is None else c.report.r2,
                    "mse": None if c.report is None else c.report.mse,
                    "early_mse": c.early_mse,
                }
                for c in sorted(self.cells, key=lambda c: (c.algorithm, c.seed, c.fold))
            ],
        }
        return doc

    @property
    def any_diverged(self) -> bool:
        return any(c.diverged for c in self.cells)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    cells_todo = [
        (algorithm, seed, fold)
        for algorithm in spec.algorithms
        for seed in spec.protocol.seeds
        for fold in range(spec.protocol.folds)
    ]
    results: list[CellResult] = []
    if jobs > 1:
        spec_doc = experiment_spec_to_dict(spec)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(
                    _cell_worker,
                    [(spec_doc, algo, seed, fold) for algo, seed, fold in cells_todo],
                )
            )
    else:
        # Reuse the materialized dataset across cells that share a seed.
        by_seed: dict[int, Dataset] = {}
        for algorithm, seed, fold in cells_todo:
            if seed not in by_seed:
                by_seed[seed] = materialize_dataset(spec.dataset, seed)
            results.append(run_cell(spec, algorithm, seed, fold, data=by_seed[seed]))
    results.sort(key=lambda c: (c.algorithm, c.seed, c.fold))
    return ExperimentResult(spec=spec, cells=results)


def experiment_spec_to_dict(spec: ExperimentSpec) -> dict:
    protocol = {
        key: getattr(spec.protocol, key)
        for key in DEFAULT_PROTOCOL
    }
    protocol["seeds"] = list(spec.protocol.seeds)
    if protocol["checkpoints"] is not None:
        protocol["checkpoints"] = list(protocol["checkpoints"])
    return {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "dataset": dict(spec.dataset),
        "algorithms": [dict(a) for a in spec.algorithms],
        "protocol": protocol,
    }


def write_results(result: ExperimentResult, out_dir, trace: bool = False) -> dict[str, Path]:
    """Write summary JSON, cells CSV, optional trace JSONL, and metadata.

    The summary and cells files are byte-deterministic for a given spec;
    runtimes and timestamps are confined to metadata.json.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(result.summary_doc(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    paths["summary"] = summary_path

    cells_path = out / "cells.csv"
    with cells_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["dataset", "algorithm", "seed", "fold", "diverged", "r2", "mse", "early_mse"]
        )
        for c in result.cells:
            writer.writerow(
                [
                    c.dataset,
                    c.algorithm,
                    c.seed,
                    c.fold,
                    int(c.diverged),
                    "" if c.report is None else repr(c.report.r2),
                    "" if c.report is None else repr(c.report.mse),
                    "" if c.early_mse is None else repr(c.early_mse),
                ]
            )
    paths["cells"] = cells_path

    if trace:
        trace_path = out / "trace.jsonl"
        with trace_path.open("w", encoding="utf-8", newline="\n") as fh:
            for c in result.cells:
                for event in c.events:
                    record = {
                        "algorithm": c.algorithm,
                        "seed": c.seed,
                        "fold": c.fold,
                        "drift_batches": c.drift_batches,
                        **event,
                    }
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
        paths["trace"] = trace_path

    metadata_path = out / "metadata.json"
    metadata_path.write_text(
        json.dumps(
            {
                "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                "cell_runtimes": {
                    f"{c.algorithm}/{c.seed}/{c.fold}": c.runtime for c in result.cells
                },
                "total_runtime": sum(c.runtime for c in result.cells),
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    paths["metadata"] = metadata_path
    return paths


def rank_from_summaries(summaries: list[dict]) -> "RankOutput":
    """Cross-dataset rank table from early_mse summaries."""
    mse_by_dataset: dict[str, dict[str, float]] = {}
    for doc in summaries:
        name = doc["name"]
        per_algo = {}
        for algo, entry in doc["summary"].items():
            if "early_mse_mean" not in entry:
                raise ValueError(
                    f"summary {name!r} has no early_mse data for {algo!r}; "
                    "run it with protocol.mode = 'early_mse'"
                )
            per_algo[algo] = entry["early_mse_mean"]
        mse_by_dataset[name] = per_algo
    table = average_rank(mse_by_dataset)
    return RankOutput(table=table)


@dataclass(frozen=True)
class RankOutput:
    table: Any

    def write_csv(self, path) -> None:
        path = Path(path)
        table = self.table
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["dataset"] + table.algorithms)
            for dataset in table.datasets:
                writer.writerow(
                    [dataset]
                    + [repr(table.ranks_by_dataset[dataset][a]) for a in table.algorithms]
                )
            writer.writerow(
                ["average_rank"] + [repr(table.average_rank[a]) for a in table.algorithms]
            )
