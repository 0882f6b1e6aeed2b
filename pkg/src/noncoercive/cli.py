"""Command-line entry point.

Exit codes: 0 success with a verdict, 2 parse error, 3 hypothesis violation
(for example an empty truncated solution set), 4 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from .errors import ParseError
from .problem import parse_problem
from .tasks import EXIT_PARSE, TASKS, run_task

TIMING_KEY = "wall_clock_seconds"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="noncoercive",
        description="Asymptotic analysis and truncation solvers for noncoercive "
                    "equilibrium and minimization problems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", type=Path, help="problem file")
    common.add_argument("--seed", type=int, default=None, help="override the task seed")
    common.add_argument("--budget", type=int, default=None,
                        help="maximum number of truncation stages")
    common.add_argument("--tol", type=float, default=None,
                        help="certificate and class-check tolerance")
    common.add_argument("--output", "-o", type=Path, default=None,
                        help="write the JSON report here instead of stdout")
    common.add_argument("--tables", type=Path, default=None,
                        help="directory for CSV coordinate tables")
    common.add_argument("--no-timing", action="store_true",
                        help="omit the wall-clock field from the report")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the task declared in the file")
    helps = {"analyze": "generalized and classical asymptotic values over directions",
             "cone": "recession cone membership",
             "solve-ep": "truncation pipeline for an equilibrium problem",
             "minimize": "truncation pipeline for a minimization problem",
             "check": "sampled bifunction class checks"}
    for name in TASKS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return ap


def write_tables(directory: Path, tables: dict) -> list[str]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in sorted(tables.items()):
        path = directory / f"{name}.csv"
        dim = len(rows[0]) if rows else 0
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i + 1}" for i in range(dim)])
            for r in rows:
                w.writerow([repr(float(v)) for v in r])
        written.append(str(path))
    return written


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        text = args.problem.read_text(encoding="utf-8")
    except OSError as e:
        print(f"error: cannot read {args.problem}: {e.strerror}", file=sys.stderr)
        return EXIT_PARSE
    try:
        problem = parse_problem(text)
        kind = None if args.command == "run" else args.command
        outcome = run_task(problem, kind, args.seed, args.budget, args.tol)
    except ParseError as e:
        print(f"{args.problem}:{e}", file=sys.stderr)
        report = {"format": "noncoercive-report v1", "error": e.to_dict(),
                  "exit_code": EXIT_PARSE}
        _emit(args, report)
        return EXIT_PARSE
    report = outcome.report
    if args.tables is not None:
        report["tables"] = write_tables(args.tables, outcome.tables)
    if not args.no_timing:
        report[TIMING_KEY] = round(time.perf_counter() - start, 6)
    _emit(args, report)
    return outcome.exit_code


def _emit(args, report: dict) -> None:
    text = dump_report(report)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")


if __name__ == "__main__":
    sys.exit(main())
