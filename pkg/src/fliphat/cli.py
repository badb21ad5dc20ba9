"""Command-line harness: ``fliphat run`` and ``fliphat verify``."""
import argparse
import logging
import sys
import time
from pathlib import Path

from . import acceptance
from .exceptions import ConfigError
from .experiment import (config_help, default_out_dir, emit_csv, emit_ledger, emit_meta, emit_svg_plot,
                         load_config, run_sweep)

log = logging.getLogger("fliphat")

SUITES = ("quick", "figure", "acceptance", "smoke")


def _run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out_dir) if args.out_dir else default_out_dir()
    parallel = args.parallel if args.parallel is not None else cfg.parallel
    start = time.time()
    n_cells = len(cfg.dimensions) * len(cfg.epsilons) * cfg.repetitions
    log.info("running %d cells with %d worker(s)", n_cells, parallel)
    res = run_sweep(cfg, parallel=parallel)
    raw, agg = emit_csv(res, out_dir)
    emit_ledger(res, out_dir / "ledger.json")
    emit_meta(res, out_dir / "run_meta.json")
    if args.plot:
        emit_svg_plot(res, out_dir / "regret_vs_d.svg")
    log.info("done in %.1fs", time.time() - start)
    for a in res.aggregates:
        print(f"d={a.d:<6d} eps={a.epsilon:<6g} mean={a.mean_regret:.2f} "
              f"sd={a.stddev:.2f} ci95=+-{a.ci95_halfwidth:.2f}")
    print(f"wrote {raw}, {agg}")
    return 0


def _verify(args):
    if args.suite == "quick":
        results = [check() for check in acceptance.QUICK_CHECKS]
    elif args.suite == "figure":
        results = acceptance.run_figure_checks()
    elif args.suite == "smoke":
        results = [acceptance.check_parallel_determinism(acceptance.small_figure_config())]
    else:
        results = [check() for check in acceptance.QUICK_CHECKS] + acceptance.run_figure_checks()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="fliphat", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run",
        help="run a regret-versus-dimension sweep",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="config keys (key = value, lists comma-separated, epsilon 'inf' = non-private):\n"
               + config_help()
               + "\n\noutput directory defaults to $FLIPHAT_OUT_DIR or ./fliphat-out",
    )
    run.add_argument("--config", required=True, help="path to a key = value config file")
    run.add_argument("--out-dir", help="directory for raw.csv, aggregate.csv, ledger.json, run_meta.json")
    run.add_argument("--parallel", type=int, help="worker processes (overrides the config)")
    run.add_argument("--plot", action="store_true", help="also write regret_vs_d.svg")
    run.set_defaults(func=_run)

    verify = sub.add_parser("verify", help="run an acceptance suite; exit 1 on any failure")
    verify.add_argument("--suite", choices=SUITES, default="quick",
                        help="quick: criteria 2-7; figure: criteria 1 and 8; acceptance: all; smoke: parallel determinism on a tiny sweep")
    verify.set_defaults(func=_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
