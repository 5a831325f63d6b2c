"""Command line entry point: ``upconcave run | accept | opt``."""
import argparse
import json
import logging
import sys

import numpy as np

from .acceptance import SUITES, run_acceptance
from .domains import contains, maximal_convex_subset
from .harness import find_comparator, load_config, run_experiment


def _seeds(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}")


def _cmd_run(args):
    cfg = load_config(args.config)
    if args.seeds:
        cfg.seeds = args.seeds
    summary = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    for t, row in summary["checkpoints"].items():
        print(f"t={t:>6}  mean alpha-regret {row['mean_regret']:.6g}  "
              f"bound {row['bound']:.6g}  {'ok' if row['within_bound'] else 'EXCEEDED'}")
    if "offline" in summary:
        off = summary["offline"]
        print(f"offline mean f {off['mean_f_output']:.6g} >= {off['threshold']:.6g}: "
              f"{'ok' if off['passed'] else 'FAILED'}")
    print("PASS" if summary["passed"] else "FAIL")
    return 0 if summary["passed"] else 1


def _cmd_accept(args):
    results = run_acceptance(args.suite)
    for c in results:
        print(c.line())
        if args.verbose:
            print(json.dumps(c.measured, indent=2, default=str))
    return 0 if all(c.passed for c in results) else 1


def _cmd_opt(args):
    cfg = load_config(args.config)
    if len(cfg.objective_specs) != 1:
        print("opt needs a config with a single objective", file=sys.stderr)
        return 2
    Kstar = maximal_convex_subset(cfg.constraint)
    res = find_comparator(Kstar, cfg.objectives()[0], args.budget, args.rng_seed)
    ok = contains(Kstar, res.u_star, 1e-9) and bool(np.isfinite(res.opt))
    print(json.dumps({"opt": res.opt, "u_star": res.u_star.tolist(), "method": res.method,
                      "probes": res.probes, "gap_estimate": res.gap_estimate,
                      "per_method": res.per_method, "feasible": ok}, indent=2))
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="upconcave")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a regret experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--seeds", type=_seeds)
    run.add_argument("--out", help="output directory (default: $UPCONCAVE_OUTPUT_DIR or ./results)")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=_cmd_run)

    acc = sub.add_parser("accept", help="run an acceptance suite")
    acc.add_argument("--suite", required=True, help=", ".join(SUITES))
    acc.add_argument("-v", "--verbose", action="store_true")
    acc.set_defaults(func=_cmd_accept)

    opt = sub.add_parser("opt", help="best fixed point over K* for a config's objective")
    opt.add_argument("--config", required=True)
    opt.add_argument("--budget", type=int, default=4096)
    opt.add_argument("--rng-seed", type=int, default=0)
    opt.set_defaults(func=_cmd_opt)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
