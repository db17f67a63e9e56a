"""Command-line entry point.

    tcsflock run <config.ini>
    tcsflock sweep <config.ini> --eps 0.2,0.1,0.05
    tcsflock check <manifest.json>

Output directories are created under the current directory, or under
TCSFLOCK_OUTPUT_ROOT when set. Exit codes: 0 ok, 2 config error, 3 numeric
instability, 4 invariant violation.
"""

import argparse
import sys

from . import runner
from .errors import (ConfigError, DomainError, InstabilityError,
                     InvariantViolation, PositivityError, StiffnessError)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INVARIANT = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tcsflock",
        description="Multiscale thermomechanical flocking simulations on the torus")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the scenario in a config file")
    p_run.add_argument("config", help="path to the INI configuration")

    p_sweep = sub.add_parser("sweep", help="epsilon sweep against the macroscopic limit")
    p_sweep.add_argument("config", help="path to the INI configuration")
    p_sweep.add_argument("--eps", default=None,
                         help="comma-separated epsilon list, e.g. 0.2,0.1,0.05")

    p_check = sub.add_parser("check", help="re-verify invariants of a stored run")
    p_check.add_argument("manifest", help="path to a manifest.json")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            manifest = runner.run(args.config)
            print(f"run complete: {manifest.path}")
        elif args.command == "sweep":
            if args.eps:
                eps = [float(tok) for tok in args.eps.split(",") if tok.strip()]
                if not eps:
                    raise ConfigError("--eps must list at least one value")
            else:
                eps = None
            cfg = runner.load_config(args.config)
            manifest = runner.sweep(cfg, eps or cfg.epsilons)
            print(f"sweep complete: {manifest.path}")
        elif args.command == "check":
            runner.check(args.manifest)
            print("all invariants verified")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InstabilityError, StiffnessError, PositivityError, DomainError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
