"""Command line entry point: ``ricianmiso {run,compare,plotdata,validate}``.

Exit codes: 0 success, 1 comparison failure, 2 config/validation error,
3 numerical failure.
"""
import argparse
import logging
import sys
from pathlib import Path

from ..channel import Scenario, sample_positions
from ..errors import ConfigError, ParameterError, RicianMisoError, ReportError
from ..streams import RandomStreams
from .config import dump_config, load_config
from .experiment import read_rows, run_experiment, write_rows
from .report import compare_report, emit_plotdata

EXIT_OK, EXIT_COMPARE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("ricianmiso")


def _load(args):
    config = load_config(args.config)
    return config.replace(seed=getattr(args, "seed", None), trials=getattr(args, "trials", None))


def _next_run_dir(out):
    out.mkdir(parents=True, exist_ok=True)
    i = 1
    while (out / f"run-{i:03d}").exists():
        i += 1
    run = out / f"run-{i:03d}"
    run.mkdir()
    return run


def cmd_run(args):
    config = _load(args)
    config.validate()
    run = _next_run_dir(Path(args.out or config.output))
    dump_config(config, run / "config.yaml")
    rows = run_experiment(config, workers=args.workers)
    path = write_rows(rows, run / "results.csv")
    print(path)
    if any(r.is_error for r in rows):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_compare(args):
    rows = [r for p in args.results for r in read_rows(p)]
    thresholds = None
    if args.config:
        thresholds = load_config(args.config).thresholds()
    try:
        report = compare_report(rows, thresholds, args.threshold)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if "failed" in str(exc) else EXIT_CONFIG
    print(report.format())
    return EXIT_OK if report.passed else EXIT_COMPARE


def cmd_plotdata(args):
    rows = [r for p in args.results for r in read_rows(p)]
    for path in emit_plotdata(rows, args.out, figure=not args.no_figure):
        print(path)
    return EXIT_OK


def cmd_validate(args):
    config = _load(args)
    streams = RandomStreams(config.seed)
    for N, K, rho, nu in config.cells():
        users = sample_positions(K, config.pathloss, streams.geometry(0, K), config.geometry)
        lam = config.lambda_value if config.lambda_mode == "explicit" else 1.0
        Scenario(N, users, rho, nu, config.P_T, config.sigma2, lam)
    print(f"ok: {len(config.cells())} cells")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ricianmiso", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a sweep configuration")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (default: config 'output')")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="MC vs DE gap report from result files")
    cmp_.add_argument("results", nargs="+")
    cmp_.add_argument("--threshold", type=float, help="uniform limit in percent")
    cmp_.add_argument("--config", help="take the per-N limits from this configuration")
    cmp_.set_defaults(func=cmd_compare)

    plot = sub.add_parser("plotdata", help="emit per-curve data files and a figure")
    plot.add_argument("results", nargs="+")
    plot.add_argument("--out", required=True)
    plot.add_argument("--no-figure", action="store_true")
    plot.set_defaults(func=cmd_plotdata)

    val = sub.add_parser("validate", help="lint a configuration and check scenario invariants")
    val.add_argument("--config", required=True)
    val.add_argument("--seed", type=int)
    val.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RicianMisoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
