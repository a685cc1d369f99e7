"""Command-line front end: dataset generation, experiment runs, ranking.

Exit codes: 0 success, 2 validation error, 3 divergence (unless
--allow-divergence), 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .datagen import SpecError, StreamSpec, generate, write_csv
from .runner import (
    ExperimentSpec,
    SpecValidationError,
    rank_from_summaries,
    run_experiment,
    write_results,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}", EXIT_VALIDATION) from exc


def cmd_generate(args) -> int:
    doc = _load_json(args.spec)
    try:
        spec = StreamSpec.from_dict(doc)
        stream = generate(spec)
    except (SpecError, TypeError) as exc:
        raise CliError(f"{args.spec}: {exc}", EXIT_VALIDATION) from exc
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_csv(stream, out, sidecar=not args.no_sidecar)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc
    print(f"wrote {stream.spec.n} rows x {stream.spec.m} features to {out}")
    if stream.drift_points:
        print(f"drift points: {stream.drift_points}")
    return EXIT_OK


def cmd_run(args) -> int:
    doc = _load_json(args.spec)
    if args.seed_override is not None:
        doc.setdefault("protocol", {})["seeds"] = [args.seed_override]
    if args.target is not None:
        doc.setdefault("dataset", {})["target"] = args.target
    if args.normalize is not None:
        doc.setdefault("dataset", {})["normalize"] = args.normalize
    try:
        spec = ExperimentSpec.from_dict(doc)
    except SpecValidationError as exc:
        raise CliError(f"{args.spec}: {exc}", EXIT_VALIDATION) from exc
    try:
        result = run_experiment(spec, jobs=args.jobs)
        paths = write_results(result, args.out, trace=args.trace)
    except OSError as exc:
        raise CliError(f"run failed on I/O: {exc}", EXIT_IO) from exc
    for kind, path in sorted(paths.items()):
        print(f"{kind}: {path}")
    diverged = [c for c in result.cells if c.diverged]
    if diverged:
        print(f"{len(diverged)} cell(s) diverged", file=sys.stderr)
        if not args.allow_divergence:
            return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_rank(args) -> int:
    summaries = [_load_json(path) for path in args.summaries]
    try:
        output = rank_from_summaries(summaries)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from exc
    try:
        output.write_csv(args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from exc
    print(f"rank table: {args.out}")
    best = min(output.table.average_rank, key=output.table.average_rank.get)
    print(f"best average rank: {best} ({output.table.average_rank[best]:.3f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftreg",
        description="Streaming regression benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="materialize a synthetic dataset to CSV")
    gen.add_argument("--spec", required=True, help="stream spec JSON file")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument(
        "--no-sidecar", action="store_true", help="skip the ground-truth sidecar JSON"
    )
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="execute an experiment spec")
    run.add_argument("--spec", required=True, help="experiment spec JSON file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="parallel cell workers")
    run.add_argument("--seed-override", type=int, default=None)
    run.add_argument("--allow-divergence", action="store_true")
    run.add_argument("--trace", action="store_true", help="write trace.jsonl")
    run.add_argument("--target", default=None, help="CSV target column name")
    run.add_argument(
        "--normalize", default=None, choices=["minmax"], help="CSV feature scaling"
    )
    run.set_defaults(func=cmd_run)

    rank = sub.add_parser("rank", help="cross-dataset rank table from summaries")
    rank.add_argument("summaries", nargs="+", help="summary.json files")
    rank.add_argument("--out", required=True, help="output CSV path")
    rank.set_defaults(func=cmd_rank)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
