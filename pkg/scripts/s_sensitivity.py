#!/usr/bin/env python3
"""Sensitivity of the fiberwise H^s diagnostics to s (reported, not asserted).

Prints the Bochner-norm trace ratios and the semicontinuity distances for a few
values of s in (1/2, 1).
"""

import argparse

from thinhomog.cli import csv_text
from thinhomog.config import SCENARIOS
from thinhomog.converge import check_trace_inequality, semicontinuity_experiment


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="oscillating")
    p.add_argument("--s", type=float, nargs="+", default=[0.55, 0.65, 0.75, 0.85, 0.95])
    p.add_argument("--trials", type=int, default=20)
    args = p.parse_args(argv)
    rows = []
    for s in args.s:
        cfg = SCENARIOS[args.scenario](s=s, random_starts=2)
        ineq = check_trace_inequality(cfg.g, cfg.h, cfg.beta, cfg.eps_list, args.trials, s,
                                      cfg.boundary_layer_trials, cfg.resolution, cfg.seed)
        rep = semicontinuity_experiment(cfg)
        _, lo = rep.table.series(f"dist_lower_Hs{s:g}")
        _, up = rep.table.series(f"dist_upper_Hs{s:g}")
        for k, eps in enumerate(cfg.eps_list):
            rows.append([s, eps, ineq.max_hs[k], lo[k], up[k]])
    print(csv_text(["s", "eps", "max_ratio_Hs", "dist_lower_Hs", "dist_upper_Hs"], rows), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
