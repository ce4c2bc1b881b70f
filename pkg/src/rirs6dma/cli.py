"""Command-line entry point: run, sweep, convergence, validate, bench."""

from __future__ import annotations

import argparse
import os
import sys
import time

from .config import ExperimentConfig

__all__ = ["main", "cli_main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rirs6dma",
        description="Two-timescale rotatable-surface / movable-antenna downlink simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="JSON or INI config file")
        p.add_argument("--seed", type=int, help="root seed (overrides config)")
        p.add_argument("--desk", action="store_true", help="reduced desk-scale profile")
        p.add_argument("--out", metavar="PATH", default=".", help="output directory")
        p.add_argument("--threads", type=int, help="worker threads for sweeps")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field")

    p_run = sub.add_parser("run", help="optimize one scheme on one seed")
    common(p_run)
    p_run.add_argument("--scheme", default="proposed", help="scheme name")

    p_sweep = sub.add_parser("sweep", help="scheme comparison along one axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=("power", "elements", "paths", "aperture"))
    p_sweep.add_argument("--points", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--schemes", default="proposed,fixed_configuration",
                         help="comma-separated scheme names")
    p_sweep.add_argument("--seeds", type=int, help="number of S-CSI seeds")

    p_conv = sub.add_parser("convergence", help="emit per-iteration optimizer traces")
    common(p_conv)
    mode = p_conv.add_mutually_exclusive_group(required=True)
    mode.add_argument("--single-user", action="store_true")
    mode.add_argument("--multi-user", action="store_true")
    p_conv.add_argument("--inner", default="scg", choices=("scg", "ssca"))

    p_val = sub.add_parser("validate", help="run the independent-oracle smoke suite")
    common(p_val)

    p_bench = sub.add_parser("bench", help="compare compiled and pure-python kernel paths")
    common(p_bench)
    p_bench.add_argument("--repeat", type=int, default=20)
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.desk:
        config = config.desk()
    if args.overrides:
        config = config.with_overrides(args.overrides)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    if getattr(args, "threads", None) is not None:
        config = config.replace(threads=args.threads)
    return config


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = _load_config(args)
    except (KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    from . import harness

    os.makedirs(args.out, exist_ok=True)

    def path(name):
        return os.path.join(args.out, name)

    if args.command == "run":
        if args.scheme not in harness.SCHEMES:
            print(f"error: unknown scheme {args.scheme!r}; known: {', '.join(sorted(harness.SCHEMES))}",
                  file=sys.stderr)
            return 2
        t0 = time.perf_counter()
        record = harness.run_scheme(config, args.scheme)
        harness.write_results_csv(path("results.csv"), [record])
        harness.write_manifest(path("manifest.json"), config, [config.seed], [args.scheme])
        print(f"{args.scheme}: rate {record.rate:.4f} +/- {record.rate_stderr:.4f} bps/Hz "
              f"(seed {record.seed}, {time.perf_counter() - t0:.1f}s)")
        print(f"wrote {path('results.csv')}")
        return 0

    if args.command == "sweep":
        schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
        try:
            points = [float(x) for x in args.points.split(",") if x.strip()]
        except ValueError:
            print("error: --points must be comma-separated numbers", file=sys.stderr)
            return 2
        if args.seeds is not None:
            config = config.replace(n_seeds=args.seeds)
        seeds = list(range(config.seed, config.seed + config.n_seeds))
        try:
            records = harness.run_sweep(config, schemes, args.axis, points, seeds)
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        harness.write_results_csv(path("results.csv"), records)
        harness.write_summary_csv(path("summary.csv"), harness.summarize(records))
        harness.write_manifest(path("manifest.json"), config, seeds, schemes, args.axis, points)
        print(f"wrote {path('results.csv')} ({len(records)} rows) and {path('summary.csv')}")
        return 0

    if args.command == "convergence":
        rows = harness.convergence_traces(config, single_user=args.single_user, inner=args.inner)
        harness.write_trace_csv(path("trace.csv"), rows)
        harness.write_manifest(path("manifest.json"), config, [config.seed],
                               ["convergence:single" if args.single_user else "convergence:multi"])
        print(f"wrote {path('trace.csv')} ({len(rows)} rows)")
        return 0

    if args.command == "validate":
        from .validation import run_validation

        return run_validation(config)

    if args.command == "bench":
        from .bench import run_bench

        return run_bench(repeat=args.repeat)

    return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
