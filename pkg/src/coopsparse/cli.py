"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import MODES, ConfigError, default_config, from_dict, load_config
from .estimator import NumericalError
from .harness import compare_modes, diagnose_excitation, run_experiment
from .solver import SolverError

log = logging.getLogger("coopsparse")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coopsparse", description="Distributed sparse identification simulator.")
    ap.add_argument("--print-default-config", action="store_true", help="print the default JSON config and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")
    for name, help_ in (
        ("run", "run all repeats, write run_<s>.csv, summary.csv, t0.csv"),
        ("compare", "distributed vs non-cooperative, write compare.csv"),
        ("diagnose", "excitation diagnostics, write excitation.csv"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config (default: built-in example)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--T", type=int, dest="T")
        p.add_argument("--S", type=int, dest="S")
        if name == "run":
            p.add_argument("--states", action="store_true", help="also write states_<s>.csv")
            p.add_argument("--debug-solver", action="store_true", help="also write solver_debug_<s>.csv")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.print_default_config:
        print(json.dumps(default_config(), indent=2))
        return 0
    if args.command is None:
        ap.print_help(sys.stderr)
        return 2
    try:
        cfg = load_config(args.config) if args.config else from_dict(default_config())
        cfg = cfg.with_overrides(seed=args.seed, mode=args.mode, T=args.T, S=args.S)
        if args.command == "run":
            run_experiment(cfg, args.out, workers=args.workers, states=args.states, solver_debug=args.debug_solver)
        elif args.command == "compare":
            compare_modes(cfg, args.out, workers=args.workers)
        else:
            diagnose_excitation(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, SolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
