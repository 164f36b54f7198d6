"""Command-line interface.

Three subcommands::

    hdtwosample test      one dataset, full suite report
    hdtwosample simulate  Monte Carlo size/power cells
    hdtwosample batch     feature-set batch with BH control

Exit codes: 0 on success, 2 for validation or parse errors, 3 for
numerical calibration failures.  The primary output artifact (stdout or
``--out``) is byte-identical across reruns with the same arguments and
inputs; wall-clock timing goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

from . import __version__, batch as batch_mod, simulate as sim_mod
from .data import load_two_sample
from .errors import CalibrationError, ParseError, ValidationError
from .suite import METHODS, run_all_tests

_DESK_GRID = [(n, p) for n in (100, 200) for p in (100, 200, 500)]
_FULL_GRID = [(n, p) for n in (100, 200) for p in (100, 200, 500, 800, 1000)]


def _threshold_arg(raw: str) -> str | float:
    try:
        return float(raw)
    except ValueError:
        return raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdtwosample",
        description="Power-enhanced two-sample tests for high-dimensional data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--alpha", type=float, default=0.05, help="test level")
        p.add_argument(
            "--threshold", type=_threshold_arg, default="practical",
            help="mean screening threshold: theory, practical, or a number",
        )
        p.add_argument(
            "--threshold-cov", type=_threshold_arg, default="practical",
            help="covariance screening threshold: theory, practical, or a number",
        )
        p.add_argument("--threads", type=int, default=1, help="worker count")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument(
            "--format", choices=("json", "csv"), default="json",
            help="output format",
        )

    def add_data_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data", required=True, help="delimited data table")
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--group-col", help="label column inside the table")
        group.add_argument("--labels", help="sidecar label file, one per row")
        p.add_argument(
            "--delimiter", default=None,
            help="field delimiter (auto-detected when omitted)",
        )

    p_test = sub.add_parser("test", help="run the full suite on one dataset")
    add_data_args(p_test)
    add_common(p_test)
    p_test.add_argument(
        "--block-size", type=int, default=256,
        help="row-block width of the screening sweep",
    )
    p_test.add_argument(
        "--strict-reduction", action="store_true",
        help="force a sequential sweep (single worker)",
    )

    p_sim = sub.add_parser("simulate", help="run Monte Carlo cells")
    p_sim.add_argument(
        "--scenario", required=True, choices=sim_mod.HYPOTHESES,
        help="hypothesis to simulate",
    )
    p_sim.add_argument("--N", type=int, default=100, dest="n_per_group",
                       help="per-group sample size")
    p_sim.add_argument("--p", type=int, default=100, help="dimension")
    p_sim.add_argument("--reps", type=int, default=None,
                       help="replications (default 1000; 5000 with --grid full)")
    p_sim.add_argument("--seed", type=int, default=0, help="base seed")
    p_sim.add_argument(
        "--innovation", choices=("normal", "gamma"), default="normal",
        help="innovation distribution",
    )
    p_sim.add_argument(
        "--fix-perturbation", action="store_true",
        help="freeze the sparse covariance perturbation across replications",
    )
    p_sim.add_argument(
        "--grid", choices=("desk", "full"), default=None,
        help="run a preset (N, p) grid instead of a single cell",
    )
    add_common(p_sim)

    p_batch = sub.add_parser("batch", help="test feature sets with BH control")
    add_data_args(p_batch)
    p_batch.add_argument("--sets", required=True, help="feature-set file")
    p_batch.add_argument(
        "--methods", default=",".join(METHODS),
        help="comma-separated subset of " + ",".join(METHODS),
    )
    add_common(p_batch)

    return parser


def _load_data(args: argparse.Namespace):
    return load_two_sample(
        args.data,
        group_col=args.group_col,
        label_file=args.labels,
        delimiter=args.delimiter,
    )


def _emit(payload_json: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(payload_json)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(payload_json)


def _wrap(command: str, config: dict, body: dict) -> dict:
    return {
        "tool": {"name": "hdtwosample", "version": __version__},
        "command": command,
        "config": config,
        **body,
    }


def _csv_string(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# --- subcommand handlers -----------------------------------------------


def _run_test(args: argparse.Namespace) -> str:
    data = _load_data(args)
    workers = 1 if args.strict_reduction else args.threads
    report = run_all_tests(
        data,
        alpha=args.alpha,
        threshold_mean=args.threshold,
        threshold_cov=args.threshold_cov,
        block_size=args.block_size,
        workers=workers,
    )
    config = {
        "data": args.data,
        "group_col": args.group_col,
        "labels": args.labels,
        "alpha": args.alpha,
        "threshold": args.threshold,
        "threshold_cov": args.threshold_cov,
        "block_size": args.block_size,
        "strict_reduction": args.strict_reduction,
        "threads": workers,
    }
    if args.format == "csv":
        stats = {
            "M": report.mean.m_standardized,
            "MPE": report.mean.m_pe,
            "T": report.covariance.t_standardized,
            "TPE": report.covariance.t_pe,
            "S": report.combined.s_stat,
            "C": report.combined.c_stat,
            "J": report.combined.j_stat,
        }
        p_values = {
            "M": report.mean.p_value_unenhanced,
            "MPE": report.mean.p_value,
            "T": report.covariance.p_value_unenhanced,
            "TPE": report.covariance.p_value,
            "S": report.combined.p_value_s,
            "C": report.combined.p_value_c,
            "J": report.combined.p_value_j,
        }
        rows = [
            [name, repr(stats[name]), repr(p_values[name]), report.rejections[name]]
            for name in METHODS
        ]
        return _csv_string(["method", "statistic", "p_value", "reject"], rows)
    payload = _wrap("test", config, {"result": report.to_dict()})
    return json.dumps(payload, indent=2) + "\n"


def _run_simulate(args: argparse.Namespace) -> str:
    if args.grid is None:
        cells_np = [(args.n_per_group, args.p)]
        reps = args.reps if args.reps is not None else 1000
    else:
        cells_np = _DESK_GRID if args.grid == "desk" else _FULL_GRID
        default = 1000 if args.grid == "desk" else 5000
        reps = args.reps if args.reps is not None else default
    results = []
    for n_per_group, p in cells_np:
        spec = sim_mod.ScenarioSpec(
            hypothesis=args.scenario,
            n_per_group=n_per_group,
            p=p,
            innovation=args.innovation,
            replications=reps,
            alpha=args.alpha,
            seed=args.seed,
            threshold_mean=args.threshold,
            threshold_cov=args.threshold_cov,
            fix_perturbation=args.fix_perturbation,
        )
        cell = sim_mod.run_cell(spec, workers=args.threads)
        results.append(cell)
    config = {
        "scenario": args.scenario,
        "grid": args.grid,
        "replications": reps,
        "seed": args.seed,
        "alpha": args.alpha,
        "innovation": args.innovation,
        "threshold": args.threshold,
        "threshold_cov": args.threshold_cov,
        "fix_perturbation": args.fix_perturbation,
        "threads": args.threads,
    }
    if args.format == "csv":
        rows = []
        for cell in results:
            for name in METHODS:
                rows.append([
                    cell.spec.hypothesis, cell.spec.n_per_group, cell.spec.p,
                    cell.spec.innovation, cell.replications, cell.spec.seed,
                    name,
                    repr(cell.frequencies[name]), repr(cell.std_errors[name]),
                ])
        return _csv_string(
            ["scenario", "N", "p", "innovation", "replications", "seed",
             "method", "frequency", "std_error"],
            rows,
        )
    payload = _wrap(
        "simulate", config, {"cells": [cell.to_dict() for cell in results]}
    )
    return json.dumps(payload, indent=2) + "\n"


def _run_batch(args: argparse.Namespace) -> str:
    data = _load_data(args)
    sets = batch_mod.load_feature_sets(args.sets)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    result = batch_mod.run_batch(
        data,
        sets,
        alpha=args.alpha,
        methods=methods,
        threshold_mean=args.threshold,
        threshold_cov=args.threshold_cov,
        workers=args.threads,
    )
    config = {
        "data": args.data,
        "sets": args.sets,
        "group_col": args.group_col,
        "labels": args.labels,
        "alpha": args.alpha,
        "methods": list(methods),
        "threshold": args.threshold,
        "threshold_cov": args.threshold_cov,
        "threads": args.threads,
    }
    if args.format == "csv":
        rows = []
        for idx, res in enumerate(result.results):
            for method in methods:
                rows.append([
                    res.name, res.category, res.size, res.degenerate, method,
                    repr(res.p_values[method]),
                    bool(result.rejected[method][idx]),
                ])
        return _csv_string(
            ["set", "category", "size", "degenerate", "method", "p_value",
             "rejected"],
            rows,
        )
    payload = _wrap("batch", config, {"result": result.to_dict()})
    return json.dumps(payload, indent=2) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        if args.command == "test":
            output = _run_test(args)
        elif args.command == "simulate":
            output = _run_simulate(args)
        else:
            output = _run_batch(args)
    except (ParseError, ValidationError) as exc:
        print(f"hdtwosample: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hdtwosample: error: {exc}", file=sys.stderr)
        return 2
    except CalibrationError as exc:
        print(f"hdtwosample: calibration failure: {exc}", file=sys.stderr)
        return 3
    _emit(output, args.out)
    print(
        f"hdtwosample: {args.command} completed in "
        f"{time.perf_counter() - start:.3f} s",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
