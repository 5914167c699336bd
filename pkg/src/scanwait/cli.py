"""Command-line entry point: ``scanwait <subcommand> [flags]``.

Exit codes: 0 ok, 2 config error, 3 series non-convergence, 4 solver failure.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import experiments as ex

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_SOLVER = 0, 2, 3, 4


def _common(p, mc=False):
    p.add_argument("--config", help="INI file with an [experiment] section; flags override it")
    p.add_argument("--receiver", choices=ex.RECEIVERS)
    p.add_argument("--mod", choices=("bpsk", "pam", "qam"))
    p.add_argument("--M", type=int, help="modulation order for pam/qam")
    p.add_argument("--m", type=float, help="Nakagami m")
    p.add_argument("--L", type=int, help="number of branches")
    p.add_argument("--rho", type=float, help="exponential correlation coefficient (<= 1e-4 means IID)")
    p.add_argument("--delta", type=float, help="power decay factor")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gbar1-db", type=float, help="first-branch average SNR in dB")
    g.add_argument("--gbar1-range", help="dB grid start:stop:step (inclusive) or a comma list")
    t = p.add_mutually_exclusive_group()
    t.add_argument("--gt1", type=float, help="explicit first-branch threshold in dB")
    t.add_argument("--anpe-target", type=float, help="pin the SWC average number of path estimations")
    t.add_argument("--sec-matched", action="store_true", default=None,
                   help="SWC budget matched to SEC at its error-optimal threshold")
    p.add_argument("--tol", type=float, help="relative series truncation tolerance")
    p.add_argument("--convention", choices=("elementwise", "matrix"), help="reading of sqrt(Sigma)")
    p.add_argument("--out", help="output CSV path (default stdout)")
    if mc:
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


_FLAG_TO_FIELD = {
    "receiver": "receiver", "mod": "mod", "M": "M", "m": "m", "L": "L", "rho": "rho", "delta": "delta",
    "gt1": "gt1_db", "anpe_target": "anpe_target", "sec_matched": "sec_matched", "tol": "tol",
    "convention": "convention", "out": "out", "samples": "samples", "seed": "seed",
}


def build_config(args, **forced):
    base = ex.ExperimentConfig()
    if getattr(args, "config", None):
        base = ex.ExperimentConfig.from_ini(Path(args.config).read_text())
    kw = {}
    for flag, fname in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            kw[fname] = v
    if kw.get("gt1_db") is not None or kw.get("anpe_target") is not None or kw.get("sec_matched"):
        # a policy given on the command line replaces whatever the file chose
        kw.setdefault("gt1_db", None)
        kw.setdefault("anpe_target", None)
        kw.setdefault("sec_matched", False)
    if getattr(args, "gbar1_db", None) is not None:
        kw["gbar1_db"] = (args.gbar1_db,)
    elif getattr(args, "gbar1_range", None):
        kw["gbar1_db"] = ex.parse_range(args.gbar1_range)
    kw.update(forced)
    return dataclasses.replace(base, **kw).validate()


def _emit(rows, out):
    text = ex.write_csv(rows, out)
    if out is None:
        sys.stdout.write(text)
    return ex.exit_status(rows)


def cmd_eval(args):
    cfg = build_config(args, method="analytic")
    if len(cfg.gbar1_db) != 1:
        raise ex.ConfigError("eval takes a single --gbar1-db; use sweep for grids")
    return _emit([ex.run_point(cfg)], cfg.out)


def cmd_sweep(args):
    cfg = build_config(args, method="analytic")
    return _emit(ex.sweep(cfg), cfg.out)


def cmd_solve(args):
    cfg = build_config(args)
    return _emit(ex.sweep(cfg, thresholds_only=True), cfg.out)


def cmd_simulate(args):
    cfg = build_config(args, method="mc")
    return _emit(ex.sweep(cfg), cfg.out)


def cmd_calibrate(args):
    cfg = build_config(args, receiver="mrc")
    report, text = ex.calibrate(cfg, cfg.out)
    if cfg.out is None:
        sys.stdout.write(text)
    for line in report.lines():
        logging.getLogger("scanwait").info(line)
    return EXIT_OK


def cmd_reproduce(args):
    base = ex.ExperimentConfig(samples=args.samples or 1_000_000, seed=args.seed if args.seed is not None else 2024,
                               tol=args.tol or 1e-6)
    grid = ex.parse_range(args.gbar1_range) if args.gbar1_range else ex.GBAR_FIG
    out_dir = Path(args.out or "results")
    rows = ex.reproduce(args.name, out_dir, base, grid)
    if args.name == "table1":
        cols = ex.table1_nmin(rows)
        print("gbar1_db," + ",".join(cols))
        for k, g in enumerate(ex.GBAR_TABLE):
            print(f"{g}," + ",".join(str(cols[c][k]) for c in cols))
    return ex.exit_status(rows)


def make_parser():
    p = argparse.ArgumentParser(prog="scanwait", description="Scan-and-wait diversity receiver analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", help="analytic evaluation at one average SNR")
    _common(s)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="analytic evaluation over an average-SNR grid")
    _common(s)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("solve-threshold", help="threshold and path-estimation budget only")
    _common(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simulate", help="Monte Carlo evaluation")
    _common(s, mc=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("calibrate", help="check which sqrt(Sigma) reading matches simulated statistics")
    _common(s, mc=True)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("reproduce", help="regenerate a figure or table grid as CSV")
    s.add_argument("name", choices=ex.REPRODUCIBLE)
    s.add_argument("--out", help="output directory (default ./results)")
    s.add_argument("--gbar1-range", help="override the average-SNR grid for figure targets")
    s.add_argument("--tol", type=float)
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ex.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
