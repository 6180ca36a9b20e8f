"""Command line: ``nonholo run <scenario.json | directory>``."""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import scenario
from ._fd import EvaluationError
from .chaplygin import NotChaplyginError
from .expr import ExpressionError
from .quadrature import DomainError

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

VALIDATION_ERRORS = (scenario.ScenarioError, ExpressionError, NotChaplyginError, json.JSONDecodeError)
# some numerical failures subclass ValueError, so they are matched first
NUMERIC_ERRORS = (DomainError, EvaluationError, np.linalg.LinAlgError, ArithmeticError, RuntimeError)


def _write_csv(path, columns):
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in data:
            w.writerow(["%.17g" % x for x in row])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def run_file(path, out, fmt=None, tol=None, fixed_step=None, seed=0, quiet=False, plot=False):
    """Run one scenario file; returns the exit code."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
        if not isinstance(doc, dict):
            raise scenario.ScenarioError("scenario must be a JSON object", "/")
        result = scenario.run(doc, tol=tol, fixed_step=fixed_step, seed=seed)
    except NUMERIC_ERRORS as exc:
        print(f"{path}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (VALIDATION_ERRORS + (ValueError, OSError)) as exc:
        print(f"{path}: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    name = doc.get("name", path.stem)
    fmt = fmt or doc.get("output", {}).get("format", "csv")
    series = out / f"{name}.{fmt}"
    if fmt == "csv":
        _write_csv(series, result.columns)
    else:
        _write_json(series, {k: np.asarray(v, dtype=float).tolist() for k, v in result.columns.items()})
    summary = {"scenario": name, "action": doc["action"], "model": doc["model"]["name"], **result.summary}
    summary["series"] = series.name
    if plot and result.plot is not None:
        from .plotting import render

        summary["figure"] = render(result.columns, result.plot, out / f"{name}.png", name).name
    _write_json(out / f"{name}.summary.json", summary)
    if not quiet:
        print(json.dumps(summary))
    return EXIT_OK


def _run_one(kw):
    return run_file(**kw)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="nonholo", description="Simulate and analyse time-dependent nonholonomic systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario file or every *.json in a directory")
    p.add_argument("scenario")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--format", choices=["csv", "json"], help="time series format (default: csv)")
    p.add_argument("--tol", type=float, help="absolute integrator tolerance")
    p.add_argument("--fixed-step", type=float, help="use classical RK4 with this step")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized models and probes")
    p.add_argument("--quiet", action="store_true", help="do not print the summary")
    p.add_argument("--plot", action="store_true", help="also render a PNG of the time series")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for a scenario directory")
    args = parser.parse_args(argv)

    if args.tol is not None and not args.tol > 0:
        parser.error("--tol must be positive")
    if args.fixed_step is not None and not args.fixed_step > 0:
        parser.error("--fixed-step must be positive")
    if args.seed < 0 or args.seed >= 2**64:
        parser.error("--seed must fit in an unsigned 64-bit integer")

    target = Path(args.scenario)
    if target.is_dir():
        files = sorted(target.glob("*.json"))
    elif target.exists():
        files = [target]
    else:
        print(f"{target}: no such file", file=sys.stderr)
        return EXIT_INVALID
    jobs = [
        dict(path=f, out=args.out, fmt=args.format, tol=args.tol, fixed_step=args.fixed_step,
             seed=args.seed, quiet=args.quiet, plot=args.plot)
        for f in files
    ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            codes = list(ex.map(_run_one, jobs))
    else:
        codes = [_run_one(j) for j in jobs]
    return max(codes, default=EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
