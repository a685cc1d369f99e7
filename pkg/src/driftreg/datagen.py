"""Reproducible synthetic regression streams with scheduled concept drift.

A stream is described by an immutable :class:`StreamSpec`; generating it
is a pure function of that spec. Concepts and rows are drawn from two
independent Philox child generators of the spec seed (concepts first,
then the row stream), and rows are produced segment by segment in fixed
1024-row chunks, so the emitted values do not depend on how the stream is
consumed. Features are i.i.d. uniform over ``feature_range``; targets add
Gaussian noise with standard deviation ``noise_std`` to the active
concept's clean response. Coefficient-vector jumps between concepts can
be steered to exact Euclidean distances (direction random, magnitude
exact).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .rng import BIT_GENERATOR, spawn_generators

CHUNK_ROWS = 1024
SIDES = ("time_based", "confidence_based")
SCHEMA_VERSION = 1


class SpecError(ValueError):
    """Invalid stream specification."""


@dataclass(frozen=True)
class LinearConcept:
    intercept: float
    coeffs: np.ndarray
    noise_std: float

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(coeffs))):
            raise SpecError("concept parameters must be finite")
        if self.noise_std < 0.0:
            raise SpecError("noise_std must be non-negative")
        object.__setattr__(self, "coeffs", coeffs)

    def clean(self, x: np.ndarray) -> np.ndarray:
        return self.intercept + x @ self.coeffs


@dataclass(frozen=True)
class StreamSpec:
    kind: str
    n: int
    m: int
    noise_std: float
    seed: int
    feature_range: tuple[float, float] = (-10.0, 10.0)
    coeff_range: tuple[float, float] = (-100.0, 100.0)
    # adversarial streams
    flavor: str | None = None
    intercept_shift: float | None = None
    # drift streams
    switch_at: int | None = None
    target_ed: float | None = None
    ed_steps: tuple[float, ...] | None = None
    segment_length: int | None = None
    segments: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise SpecError("n and m must be >= 1")
        if self.noise_std < 0.0:
            raise SpecError("noise_std must be non-negative")
        lo, hi = self.feature_range
        if not lo < hi:
            raise SpecError("feature_range must be an increasing interval")
        lo, hi = self.coeff_range
        if not lo < hi:
            raise SpecError("coeff_range must be an increasing interval")

    def to_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "n": self.n,
            "m": self.m,
            "noise_std": self.noise_std,
            "seed": self.seed,
            "feature_range": list(self.feature_range),
            "coeff_range": list(self.coeff_range),
        }
        for key in (
            "flavor",
            "intercept_shift",
            "switch_at",
            "target_ed",
            "segment_length",
        ):
            value = getattr(self, key)
            if value is not None:
                doc[key] = value
        if self.ed_steps is not None:
            doc["ed_steps"] = list(self.ed_steps)
        if self.segments is not None:
            doc["segments"] = [list(pair) for pair in self.segments]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "StreamSpec":
        kwargs = dict(doc)
        kwargs["feature_range"] = tuple(kwargs.get("feature_range", (-10.0, 10.0)))
        kwargs["coeff_range"] = tuple(kwargs.get("coeff_range", (-100.0, 100.0)))
        if "ed_steps" in kwargs:
            kwargs["ed_steps"] = tuple(float(v) for v in kwargs["ed_steps"])
        if "segments" in kwargs:
            kwargs["segments"] = tuple(
                (int(c), int(length)) for c, length in kwargs["segments"]
            )
        return cls(**kwargs)

    def with_seed(self, seed: int) -> "StreamSpec":
        return replace(self, seed=seed)


def stationary_spec(n, m, noise_std, seed, **kwargs) -> StreamSpec:
    return StreamSpec("stationary", n, m, noise_std, seed, **kwargs)


def convergence_spec(n, noise_std, seed, **kwargs) -> StreamSpec:
    """Low-dimensional stationary stream used for convergence tracking."""
    return StreamSpec("stationary", n, 2, noise_std, seed, **kwargs)


def adversarial_spec(
    n, m, noise_std, seed, flavor="time_based", intercept_shift=None, **kwargs
) -> StreamSpec:
    if flavor not in SIDES:
        raise SpecError(f"flavor must be one of {SIDES}")
    return StreamSpec(
        "adversarial",
        n,
        m,
        noise_std,
        seed,
        flavor=flavor,
        intercept_shift=intercept_shift,
        **kwargs,
    )


def abrupt_drift_spec(n, m, noise_std, seed, switch_at, target_ed, **kwargs) -> StreamSpec:
    if not 0 < switch_at < n:
        raise SpecError("switch_at must split the stream")
    if target_ed <= 0.0:
        raise SpecError("target_ed must be positive")
    return StreamSpec(
        "abrupt", n, m, noise_std, seed, switch_at=switch_at, target_ed=target_ed, **kwargs
    )


def incremental_drift_spec(
    n, m, noise_std, seed, segment_length, ed_steps, **kwargs
) -> StreamSpec:
    steps = tuple(float(v) for v in ed_steps)
    if any(step <= 0.0 for step in steps):
        raise SpecError("every coefficient distance in the chain must be positive")
    if segment_length * (len(steps) + 1) != n:
        raise SpecError("segment_length * (len(ed_steps) + 1) must equal n")
    return StreamSpec(
        "incremental",
        n,
        m,
        noise_std,
        seed,
        segment_length=segment_length,
        ed_steps=steps,
        **kwargs,
    )


def gradual_drift_spec(n, m, noise_std, seed, segments, target_ed=None, **kwargs) -> StreamSpec:
    segs = tuple((int(c), int(length)) for c, length in segments)
    if any(c not in (0, 1) for c, _ in segs):
        raise SpecError("gradual streams alternate between exactly two concepts")
    if any(length < 1 for _, length in segs):
        raise SpecError("segment lengths must be positive")
    if sum(length for _, length in segs) != n:
        raise SpecError("segment lengths must sum to n")
    for (a, _), (b, _) in zip(segs, segs[1:]):
        if a == b:
            raise SpecError("consecutive segments must alternate concepts")
    if target_ed is not None and target_ed <= 0.0:
        raise SpecError("target_ed must be positive")
    return StreamSpec(
        "gradual", n, m, noise_std, seed, segments=segs, target_ed=target_ed, **kwargs
    )


def _uniform(gen, lo, hi, size):
    return gen.uniform(lo, hi, size=size)


def _unit_direction(gen, m) -> np.ndarray:
    v = gen.standard_normal(m)
    norm = float(np.linalg.norm(v))
    while norm <= 1e-12:  # measure-zero, but stay deterministic
        v = gen.standard_normal(m)
        norm = float(np.linalg.norm(v))
    return v / norm


def _draw_concepts(spec: StreamSpec, gen) -> list[LinearConcept]:
    lo, hi = spec.coeff_range
    intercept = float(_uniform(gen, lo, hi, None))
    coeffs = _uniform(gen, lo, hi, spec.m)
    first = LinearConcept(intercept, coeffs, spec.noise_std)

    if spec.kind == "stationary":
        return [first]

    if spec.kind == "adversarial":
        shift = spec.intercept_shift
        if shift is None:
            flo, fhi = spec.feature_range
            feature_std = (fhi - flo) / np.sqrt(12.0)
            shift = float(np.linalg.norm(coeffs)) * feature_std
        flipped = LinearConcept(intercept + shift, -coeffs, spec.noise_std)
        return [first, flipped]

    if spec.kind == "abrupt":
        direction = _unit_direction(gen, spec.m)
        second = LinearConcept(
            intercept, coeffs + spec.target_ed * direction, spec.noise_std
        )
        return [first, second]

    if spec.kind == "incremental":
        concepts = [first]
        current = coeffs
        for step in spec.ed_steps:
            direction = _unit_direction(gen, spec.m)
            current = current + step * direction
            concepts.append(LinearConcept(intercept, current, spec.noise_std))
        return concepts

    if spec.kind == "gradual":
        if spec.target_ed is not None:
            direction = _unit_direction(gen, spec.m)
            other_coeffs = coeffs + spec.target_ed * direction
        else:
            other_coeffs = _uniform(gen, lo, hi, spec.m)
        return [first, LinearConcept(intercept, other_coeffs, spec.noise_std)]

    raise SpecError(f"unknown stream kind {spec.kind!r}")


def _schedule(spec: StreamSpec) -> list[tuple[int, int]]:
    """(concept index, length) segments in stream order."""
    if spec.kind == "stationary":
        return [(0, spec.n)]
    if spec.kind == "adversarial":
        half = spec.n // 2
        return [(0, half), (1, spec.n - half)]
    if spec.kind == "abrupt":
        return [(0, spec.switch_at), (1, spec.n - spec.switch_at)]
    if spec.kind == "incremental":
        count = len(spec.ed_steps) + 1
        return [(i, spec.segment_length) for i in range(count)]
    if spec.kind == "gradual":
        return list(spec.segments)
    raise SpecError(f"unknown stream kind {spec.kind!r}")


class SyntheticStream:
    """Materialized schedule for one spec; rows are generated on demand."""

    def __init__(self, spec: StreamSpec):
        self.spec = spec
        concept_gen, self._row_seed_gen = spawn_generators(spec.seed, 2)
        self.concepts = _draw_concepts(spec, concept_gen)
        self.schedule = _schedule(spec)
        boundaries = np.cumsum([length for _, length in self.schedule])
        self.drift_points = [int(b) for b in boundaries[:-1]]

    def _fresh_row_gen(self):
        # Each iteration owns an independent generator with the same seed.
        return spawn_generators(self.spec.seed, 2)[1]

    def iter_chunks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        gen = self._fresh_row_gen()
        lo, hi = self.spec.feature_range
        for concept_idx, length in self.schedule:
            concept = self.concepts[concept_idx]
            produced = 0
            while produced < length:
                count = min(CHUNK_ROWS, length - produced)
                x = _uniform(gen, lo, hi, (count, self.spec.m))
                noise = gen.standard_normal(count)
                y = concept.clean(x) + self.spec.noise_std * noise
                produced += count
                yield x, y

    def iter_batches(self, batch_size: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        x_pend: list[np.ndarray] = []
        y_pend: list[np.ndarray] = []
        pending = 0
        for x, y in self.iter_chunks():
            x_pend.append(x)
            y_pend.append(y)
            pending += y.shape[0]
            while pending >= batch_size:
                xs = np.vstack(x_pend)
                ys = np.concatenate(y_pend)
                yield xs[:batch_size], ys[:batch_size]
                xs, ys = xs[batch_size:], ys[batch_size:]
                x_pend, y_pend = [xs], [ys]
                pending = ys.shape[0]
        if pending:
            yield np.vstack(x_pend), np.concatenate(y_pend)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        xs, ys = zip(*self.iter_chunks())
        return np.vstack(xs), np.concatenate(ys)

    def segment_of_rows(self) -> np.ndarray:
        """Segment index of every row (0-based, in schedule order)."""
        labels = np.empty(self.spec.n, dtype=np.int64)
        start = 0
        for seg_idx, (_, length) in enumerate(self.schedule):
            labels[start : start + length] = seg_idx
            start += length
        return labels


def generate(spec: StreamSpec) -> SyntheticStream:
    return SyntheticStream(spec)


def write_csv(stream: SyntheticStream, path, sidecar: bool = True) -> None:
    """Dataset CSV (header x1..xM,y) plus a ground-truth sidecar JSON.

    Floats are written with shortest round-trip formatting, so a given
    spec always produces byte-identical files.
    """
    path = Path(path)
    m = stream.spec.m
    header = ",".join([f"x{i + 1}" for i in range(m)] + ["y"])
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for x, y in stream.iter_chunks():
            for row, target in zip(x, y):
                fields = [repr(float(v)) for v in row]
                fields.append(repr(float(target)))
                fh.write(",".join(fields) + "\n")
    if sidecar:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "bit_generator": BIT_GENERATOR,
            "spec": stream.spec.to_dict(),
            "drift_points": stream.drift_points,
            "concepts": [
                {
                    "intercept": c.intercept,
                    "coeffs": c.coeffs.tolist(),
                    "noise_std": c.noise_std,
                }
                for c in stream.concepts
            ],
        }
        sidecar_path = path.with_suffix(path.suffix + ".meta.json")
        sidecar_path.write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


class CsvFormatError(ValueError):
    """Malformed ingested CSV; message carries row/column diagnostics."""


@dataclass(frozen=True)
class LoadedDataset:
    x: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    target_name: str
    normalization: dict | None = field(default=None)


def load_csv(path, target: str | None = None, normalize: str | None = None) -> LoadedDataset:
    """Read a numeric CSV with a header row into feature/target arrays.

    The target column is selected by name or defaults to the last column.
    ``normalize="minmax"`` maps each feature to [0, 1]; constant columns
    map to 0 with a warning. Normalization parameters are recorded for
    reproducibility.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline().strip()
        if not header_line:
            raise CsvFormatError(f"{path}: empty file")
        columns = [c.strip() for c in header_line.split(",")]
        if target is None:
            target_idx = len(columns) - 1
        else:
            try:
                target_idx = columns.index(target)
            except ValueError:
                raise CsvFormatError(
                    f"{path}: target column {target!r} not in header {columns}"
                ) from None
        rows = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(columns):
                raise CsvFormatError(
                    f"{path}:{line_no}: expected {len(columns)} fields, got {len(fields)}"
                )
            try:
                rows.append([float(v) for v in fields])
            except ValueError:
                bad = next(i for i, v in enumerate(fields) if not _is_float(v))
                raise CsvFormatError(
                    f"{path}:{line_no}: non-numeric value {fields[bad]!r} "
                    f"in column {columns[bad]!r}"
                ) from None
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    if data.shape[1] < 2:
        raise CsvFormatError(f"{path}: need at least one feature and a target")
    feature_idx = [i for i in range(data.shape[1]) if i != target_idx]
    x = data[:, feature_idx]
    y = data[:, target_idx]
    feature_names = [columns[i] for i in feature_idx]
    norm_params = None
    if normalize is not None:
        if normalize != "minmax":
            raise CsvFormatError(f"unknown normalization {normalize!r}")
        mins = x.min(axis=0)
        maxs = x.max(axis=0)
        span = maxs - mins
        constant = span <= 0.0
        if np.any(constant):
            warnings.warn(
                f"{path}: constant feature columns "
                f"{[feature_names[i] for i in np.flatnonzero(constant)]} map to 0",
                RuntimeWarning,
                stacklevel=2,
            )
        safe_span = np.where(constant, 1.0, span)
        x = (x - mins) / safe_span
        x[:, constant] = 0.0
        norm_params = {
            "method": "minmax",
            "min": mins.tolist(),
            "max": maxs.tolist(),
        }
    return LoadedDataset(
        x=x,
        y=y,
        feature_names=feature_names,
        target_name=columns[target_idx],
        normalization=norm_params,
    )


def _is_float(value: str) -> bool:
    try:
        float(value)
        return True
    except ValueError:
        return False
