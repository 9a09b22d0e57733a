#!/usr/bin/env python3
"""Run every CLI experiment over the committed configs and print a one-line verdict each."""

import argparse
import os
import sys

from thinhomog.cli import run_cli

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, "..", "configs")

PLAN = [
    ("cell", "flat"), ("cell", "oscillating"),
    ("equilibria", "cubic"), ("solve-limit", "linear"), ("solve-eps", "linear"),
    ("mesh-info", "oscillating"),
    ("converge", "flat"), ("converge", "sweep"),
    ("check-ineq", "flat"), ("check-ineq", "oscillating"),
    ("check-concentration", "concentration"),
]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="out", help="root output directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--only", nargs="*", help="restrict to these subcommands")
    args = p.parse_args(argv)
    failures = 0
    for cmd, name in PLAN:
        if args.only and cmd not in args.only:
            continue
        out = os.path.join(args.out, name)
        code = run_cli([cmd, "--config", os.path.join(CONFIGS, f"{name}.json"), "--out", out,
                        "--threads", str(args.threads)])
        print(f"# {cmd:20s} {name:14s} exit {code}", file=sys.stderr)
        failures += code != 0
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
