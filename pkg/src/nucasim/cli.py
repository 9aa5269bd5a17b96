"""Command-line front end: nucasim run | sweep | baseline.

Exit codes: 0 success, 2 usage error, 3 verification failure,
4 configuration/validation failure.
"""

import argparse
import sys
from dataclasses import replace

from .errors import ConfigurationError, UsageError, VerificationError
from .harness import (SWEEP_AXES, SimConfig, baseline, load_params,
                      rows_to_csv, rows_to_json, run_case, sweep)
from .workloads import MERGESORT, MICROBENCH, WorkloadSpec


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workload", required=True,
                        choices=(MICROBENCH, MERGESORT))
    common.add_argument("--case", type=int, default=1,
                        help="design-matrix case id, 1..8 (default 1)")
    common.add_argument("--size", type=int, required=True,
                        help="array length N in elements")
    common.add_argument("--threads", type=int, required=True,
                        help="worker thread count M")
    common.add_argument("--reps", type=int, default=1,
                        help="micro-benchmark repetition count (default 1)")
    common.add_argument("--striping", choices=("on", "off"), default=None,
                        help="memory striping over all controllers (default on)")
    common.add_argument("--no-cache", action="store_true",
                        help="disable all caches (pure DRAM traffic)")
    common.add_argument("--localised-only-intermediate", action="store_true",
                        help="apply only the intermediate step (merge into a "
                             "fresh scratch, no copy back) without localising")
    common.add_argument("--seed", type=int, default=None,
                        help="run seed for input data and migrations (default 1)")
    common.add_argument("--params", metavar="FILE", default=None,
                        help="key=value model parameter file")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-o", "--output", metavar="FILE", default=None)

    parser = argparse.ArgumentParser(
        prog="nucasim",
        description="Deterministic NUCA manycore simulator: homing policies, "
                    "thread mapping and memory striping on two parallel workloads.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common],
                   help="run one case and print its report row")
    sweep_p = sub.add_parser("sweep", parents=[common],
                             help="run one case across a value sweep")
    sweep_p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values")
    sweep_p.add_argument("--jobs", type=int, default=1,
                         help="worker processes for independent runs")
    sub.add_parser("baseline", parents=[common],
                   help="print the single-thread default-policy cycle count")
    return parser


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = SimConfig()
        if args.params:
            cfg = load_params(args.params, cfg)
        if args.no_cache:
            cfg = replace(cfg, caches_enabled=False)
        seed = args.seed if args.seed is not None else (
            cfg.seed if cfg.seed is not None else 1)
        striping = None if args.striping is None else args.striping == "on"
        wspec = WorkloadSpec(
            kind=args.workload,
            n=args.size,
            m=args.threads,
            reps=args.reps,
            intermediate_step=args.localised_only_intermediate,
            rng_seed=seed,
        )
        if args.command == "baseline":
            cycles = baseline(wspec, cfg, striping, seed)
            _write(f"{cycles}\n", args.output)
            return 0
        if args.command == "run":
            rows = [run_case(args.case, wspec, cfg, striping, seed)]
        else:
            values = [v for v in args.values.split(",") if v]
            rows = sweep(args.axis, values, wspec, args.case, cfg,
                         striping, seed, jobs=args.jobs)
        text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
        _write(text, args.output)
        return 0
    except UsageError as exc:
        print(f"nucasim: usage error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"nucasim: verification failure: {exc}", file=sys.stderr)
        return 3
    except ConfigurationError as exc:
        print(f"nucasim: invalid configuration: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
