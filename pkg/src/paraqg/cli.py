"""Command line entry point.

    paraqg <subcommand> --config <path> [--out <dir>] [--seed <u64>]

Subcommands: enhance, solve, consistency, eps-convergence, regularity,
chaos-check, selftest.  Exit codes: 0 success, 1 failed assertion or
non-converged run, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config
from .experiments import EXPERIMENTS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paraqg",
        description="Paracontrolled quasi-geostrophic equation toolbox")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, fn in EXPERIMENTS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0] if fn.__doc__
                           else None)
        p.add_argument("--config", type=Path, default=None,
                       help="flat key = value config file (defaults apply)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: <out_dir>/<subcommand>)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else RunConfig().validate()
    except ConfigError as exc:
        print(f"paraqg: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"paraqg: cannot read config: {exc}", file=sys.stderr)
        return 2
    out = args.out if args.out else Path(cfg.out_dir) / args.subcommand
    out.mkdir(parents=True, exist_ok=True)
    status = EXPERIMENTS[args.subcommand](cfg, out, args.seed)
    if status != 0:
        print(f"paraqg {args.subcommand}: FAILED (see {out})", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
