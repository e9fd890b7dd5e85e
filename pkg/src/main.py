import argparse
import logging
import os
import sys
import time

import numpy as np

from algorithms.analytic_obf import ObfParams, db_to_linear, obf_marginal_cdf, obf_marginal_pdf
from algorithms.analytic_olbf import OlbfParams, olbf_marginal_cdf, olbf_marginal_pdf
from algorithms.figures import FIGURES, figure_bundle
from algorithms.montecarlo import run_experiment
from data.experiment import SCHEMES, ExperimentConfig
from data.persistence import (
    build_manifest,
    rate_scale,
    write_manifest,
    write_report_csv,
    write_report_json,
    write_table_csv,
)
from data.system import SystemParams

logger = logging.getLogger(__name__)

THREADS_ENV = "OBFLAB_THREADS"


def parse_grid(text):
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:count, got {text!r}")
    if count < 1 or stop < start or start < 0 or (count > 1 and stop == start):
        raise argparse.ArgumentTypeError(f"grid needs 0 <= start <= stop and count >= 1, got {text!r}")
    return np.linspace(start, stop, count)


def build_parser():
    parser = argparse.ArgumentParser(prog="obflab", description="OBF/OLBF beamforming simulator and analysis")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--threads", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or 1)")
    parser.add_argument("--bits", action="store_true", help="report sim rates in bits instead of nats; figure tables carry both")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("sim", help="Monte-Carlo run of one scheduling scheme")
    sim.add_argument("--scheme", choices=SCHEMES, required=True)
    sim.add_argument("--m", type=int, required=True)
    sim.add_argument("--k", type=int, required=True)
    sim.add_argument("--snr-db", type=float, required=True)
    sim.add_argument("--trials", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--force-r", type=int, default=None)
    sim.add_argument("--analytic", action="store_true", help="attach KS distances and the analytic mean")
    sim.add_argument("--out", default=None)
    sim.add_argument("--format", choices=("csv", "json"), default="csv")

    analytic = commands.add_parser("analytic", help="tabulate an analytic marginal PDF/CDF")
    analytic.add_argument("--scheme", choices=("obf", "olbf"), required=True)
    analytic.add_argument("--m", type=int, required=True)
    analytic.add_argument("--k", type=int, required=True)
    analytic.add_argument("--snr-db", type=float, required=True)
    analytic.add_argument("--r", type=int, default=None)
    analytic.add_argument("--user-rank", type=int, required=True)
    analytic.add_argument("--grid", type=parse_grid, required=True, help="start:stop:count")
    analytic.add_argument("--out", default=None)

    figure = commands.add_parser("figure", help="data bundle behind one of the comparison plots")
    figure.add_argument("--name", choices=FIGURES, required=True)
    figure.add_argument("--trials", type=int, default=100000)
    figure.add_argument("--seed", type=int, default=1)
    figure.add_argument("--no-analytic", action="store_true")
    figure.add_argument("--out", default=None)
    return parser


def resolve_threads(flag):
    if flag is not None:
        value = flag
    else:
        value = int(os.environ.get(THREADS_ENV, "1"))
    if value < 1:
        raise ValueError(f"thread count must be at least 1, got {value}")
    return value


def _command_line(argv):
    return " ".join(["obflab"] + list(argv))


def run_sim(args, argv, workers):
    params = SystemParams(args.m, args.k, db_to_linear(args.snr_db), args.force_r)
    config = ExperimentConfig(params, args.scheme, args.trials, args.seed, args.force_r)
    report = run_experiment(config, workers, analytic=args.analytic)
    unit = "bits" if args.bits else "nats"
    scale = rate_scale(unit)
    print(f"{config.scheme}: mean sum rate {report.mean_sum_rate * scale:.6f} {unit} "
          f"(stderr {report.stderr * scale:.6f}, {config.trials} trials)")
    for rank, value in report.ks:
        print(f"  KS distance, rank {rank}: {value:.5f}")
    if report.analytic_mean is not None:
        print(f"  analytic mean sum rate: {report.analytic_mean * scale:.6f} {unit}")
    if args.out:
        manifest = build_manifest(_command_line(argv), config.to_dict(), config.seed)
        if args.format == "csv":
            summary = write_report_csv(args.out, report, manifest, unit)
            logger.info("wrote %s", summary)
        else:
            write_report_json(args.out, report, manifest, unit)
        write_manifest(args.out, manifest)
        logger.info("wrote %s", args.out)


def run_analytic(args, argv):
    P = db_to_linear(args.snr_db)
    if args.scheme == "obf":
        params = ObfParams(args.m, args.k, P, args.r if args.r is not None else args.m)
        pdf, cdf = obf_marginal_pdf, obf_marginal_cdf
    else:
        if args.r not in (None, args.m):
            raise ValueError(f"OLBF always schedules M={args.m} users")
        params = OlbfParams(args.m, args.k, P)
        pdf, cdf = olbf_marginal_pdf, olbf_marginal_cdf
    rows = [(float(y), pdf(args.user_rank, y, params), cdf(args.user_rank, y, params)) for y in args.grid]
    if args.out:
        config = {"scheme": args.scheme, "M": args.m, "K": args.k, "snr_db": args.snr_db,
                  "r": getattr(params, "r", args.m), "user_rank": args.user_rank,
                  "grid": [float(args.grid[0]), float(args.grid[-1]), len(args.grid)]}
        manifest = build_manifest(_command_line(argv), config, None)
        write_table_csv(args.out, ("y", "pdf", "cdf"), rows, manifest)
        write_manifest(args.out, manifest)
    else:
        for y, density, probability in rows:
            print(f"{y:12.6g} {density:14.8g} {probability:12.8f}")


def run_figure(args, argv, workers):
    header, rows, summary = figure_bundle(args.name, args.trials, args.seed, workers, not args.no_analytic)
    for key, value in summary.items():
        print(f"{key}: {value}")
    if args.out:
        config = {"figure": args.name, "trials": args.trials, "seed": args.seed, "analytic": not args.no_analytic}
        manifest = build_manifest(_command_line(argv), config, args.seed)
        write_table_csv(args.out, header, rows, manifest, sorted(summary.items()))
        write_manifest(args.out, manifest)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(str(v) for v in row))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    start_time = time.time()
    try:
        workers = resolve_threads(args.threads)
        if args.command == "sim":
            run_sim(args, argv, workers)
        elif args.command == "analytic":
            run_analytic(args, argv)
        else:
            run_figure(args, argv, workers)
    except ValueError as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, AssertionError, OSError) as error:
        logger.error("%s failed: %s", args.command, error)
        return 1

    end_time = time.time()
    total_execution_time = end_time - start_time
    minutes, seconds = divmod(total_execution_time, 60)
    print(f"\nTotal execution time: {int(minutes)} minutes {seconds:.4f} seconds")
    return 0


if __name__ == '__main__':
    sys.exit(main())
