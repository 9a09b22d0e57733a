#!/usr/bin/env python3
"""Homogenized coefficient q0 against the profile amplitude, with mesh-convergence data.

For g(y) = 1 + a cos(2 pi y) prints q0 on N = 32, 64, 128 columns, the
Richardson value and the observed order, for two mesh families.
"""

import argparse

import numpy as np

from thinhomog.cell import richardson_q0
from thinhomog.cli import csv_text
from thinhomog.profiles import ProfileSpec


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--amplitudes", type=float, nargs="+", default=[0.0, 0.1, 0.25, 0.5, 0.75])
    p.add_argument("--levels", type=int, nargs="+", default=[32, 64, 128])
    args = p.parse_args(argv)
    rows = []
    for a in args.amplitudes:
        g = ProfileSpec.cosine(1.0, a)
        for diagonal, ratio in (("right", 1.0), ("left", 0.5)):
            vals, extrap, order = richardson_q0(g, tuple(args.levels), diagonal, ratio)
            rows.append([a, diagonal, ratio, *vals, extrap, order])
    header = ["amplitude", "diagonal", "rows_ratio"] + [f"q0_N{n}" for n in args.levels]
    print(csv_text(header + ["q0_richardson", "order"], rows), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
