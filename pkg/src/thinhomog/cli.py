"""Command-line entry point.

Usage::

    thinhomog SUBCOMMAND --config PATH [--out DIR] [--seed N] [--threads N]

Every run writes its CSV (and VTK where relevant) into the output directory
together with ``<subcommand>_manifest.json`` echoing the resolved config.
Exit codes: 0 ok, 2 solver failure, 3 bad config or geometry, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .cell import solve_cell
from .config import ExperimentConfig, load_config
from .converge import (check_concentration_limit, check_trace_inequality, limit_data,
                       semicontinuity_experiment)
from .errors import ConfigError, SolverError
from .fem import fiber_means, l2_norm
from .mesh import build_cell_mesh, build_thin_mesh, mesh_quality
from .solvers import find_equilibria_limit, hyperbolicity, newton_eps, newton_limit
from .vtk import mesh_vtk

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_USAGE = 0, 2, 3, 64

SUBCOMMANDS = ("cell", "solve-eps", "solve-limit", "equilibria", "converge",
               "check-ineq", "check-concentration", "mesh-info")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory and rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _poly(coeffs):
    return lambda x: np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coeffs)


# --- subcommands ------------------------------------------------------------------
# each returns (stdout text, {filename: content})

def cmd_cell(cfg: ExperimentConfig):
    sol = solve_cell(build_cell_mesh(cfg.g, cfg.cell_columns))
    hd = limit_data(cfg.replace(q0=sol.q0))
    text = csv_text(["q0", "q0_energy", "discrepancy", "corrector_energy", "compatibility",
                     "mu_g", "mu_h", "f0_scale", "columns", "cg_iterations"],
                    [[sol.q0, sol.q0_energy, sol.discrepancy, sol.corrector_energy,
                      sol.compatibility_residual, hd.mu_g, hd.mu_h, hd.f0_scale,
                      cfg.cell_columns, sol.cg_iterations]])
    return text, {"cell.csv": text, "cell_corrector.vtk": mesh_vtk(sol.mesh, {"X": sol.X}, "cell corrector")}


def cmd_solve_eps(cfg: ExperimentConfig):
    u0 = _poly(cfg.u0_coeffs)
    rows, files = [], {}
    for k, eps in enumerate(cfg.eps_list):
        m = build_thin_mesh(cfg.g, cfg.h, eps, cfg.beta, cfg.resolution)
        u_init = np.repeat(u0(m.x1), m.fibers.shape[1])
        r = newton_eps(m, eps, cfg.nonlinearity, u_init, tol=cfg.newton_tol, max_newton=cfg.max_newton)
        means = fiber_means(m, r.solution)
        rows.append([eps, m.N, r.iterations, r.final_residual, r.linf_norm, r.R_bound_ok,
                     float(np.trapezoid(means, m.x1)), l2_norm(m, r.solution),
                     "+".join(sorted(set(r.linear_methods))) or "none"])
        files[f"solve_eps_{k}.vtk"] = mesh_vtk(m, {"u": r.solution}, f"thin solution eps={eps:.17g}")
    text = csv_text(["eps", "N", "iterations", "residual", "linf", "R_bound_ok", "mean", "l2",
                     "linear"], rows)
    files["solve_eps.csv"] = text
    return text, files


def cmd_solve_limit(cfg: ExperimentConfig):
    hd = limit_data(cfg)
    n = cfg.limit_cells
    x = np.linspace(0.0, 1.0, n + 1)
    r = newton_limit(n, hd, cfg.nonlinearity, _poly(cfg.u0_coeffs)(x), tol=cfg.newton_tol,
                     max_newton=cfg.max_newton)
    summary = csv_text(["q0", "f0_scale", "iterations", "residual", "linf", "R_bound_ok", "mean"],
                       [[hd.q0, hd.f0_scale, r.iterations, r.final_residual, r.linf_norm,
                         r.R_bound_ok, r.mean]])
    field = csv_text(["x", "u"], zip(x, r.solution))
    return summary, {"solve_limit.csv": summary, "solve_limit_field.csv": field}


def cmd_equilibria(cfg: ExperimentConfig):
    hd = limit_data(cfg)
    f = cfg.nonlinearity
    eq = find_equilibria_limit(cfg.limit_cells, hd, f, multistart=cfg.multistart, tol=cfg.newton_tol)
    rows = []
    for k, e in enumerate(eq):
        rep = hyperbolicity(e.solution, hd, f)
        rows.append([k, e.mean, e.linf_norm, rep.min_abs_eigenvalue, rep.hyperbolic,
                     e.iterations, e.final_residual])
    text = csv_text(["index", "mean", "linf", "min_abs_eigenvalue", "hyperbolic", "iterations",
                     "residual"], rows)
    return text, {"equilibria.csv": text}


def cmd_converge(cfg: ExperimentConfig):
    rep = semicontinuity_experiment(cfg)
    text = rep.table.to_csv()
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return text, {"converge.csv": text}


def cmd_check_ineq(cfg: ExperimentConfig):
    rep = check_trace_inequality(cfg.g, cfg.h, cfg.beta, cfg.eps_list, cfg.trials, cfg.s,
                                 cfg.boundary_layer_trials, cfg.resolution, cfg.seed, cfg.threads)
    text = rep.table().to_csv()
    trials = csv_text(["eps", "trial", "ratio_H1", f"ratio_Hs{cfg.s:g}"],
                      [[e, i, a, b] for e, r1, rs in zip(rep.eps, rep.ratios_h1, rep.ratios_hs)
                       for i, (a, b) in enumerate(zip(r1, rs))])
    return text, {"check_ineq.csv": text, "check_ineq_trials.csv": trials}


def cmd_check_concentration(cfg: ExperimentConfig):
    u0 = _poly(cfg.u0_coeffs)
    if cfg.concentration_mode == "solver":
        hd = limit_data(cfg)
        x = np.linspace(0.0, 1.0, cfg.limit_cells + 1)
        u0 = newton_limit(cfg.limit_cells, hd, cfg.nonlinearity, u0(x), tol=cfg.newton_tol,
                          max_newton=cfg.max_newton).solution
    t = check_concentration_limit(cfg.g, cfg.h, cfg.beta, cfg.eps_list, cfg.nonlinearity, u0,
                                  _poly(cfg.phi_coeffs), cfg.concentration_mode, cfg.resolution,
                                  cfg.newton_tol, cfg.max_newton, cfg.threads)
    text = t.to_csv()
    return text, {"check_concentration.csv": text}


def cmd_mesh_info(cfg: ExperimentConfig):
    rows, files = [], {}
    for k, eps in enumerate(cfg.eps_list):
        m = build_thin_mesh(cfg.g, cfg.h, eps, cfg.beta, cfg.resolution)
        q = mesh_quality(m)
        rows.append([eps, m.N, m.n_vertices, len(m.triangles), int(m.strip_mask.sum()),
                     m.strip_area(), float(m.areas.sum()), q.min_angle, q.max_angle, q.min_area])
        files[f"mesh_{k}.vtk"] = mesh_vtk(m, None, f"thin mesh eps={eps:.17g}")
    text = csv_text(["eps", "N", "vertices", "triangles", "strip_triangles", "strip_area", "area",
                     "min_angle", "max_angle", "min_area"], rows)
    files["mesh_info.csv"] = text
    return text, files


HELP = {
    "cell": "solve the periodic cell problem, report q0",
    "solve-eps": "Newton solve of the thin problem for each eps",
    "solve-limit": "Newton solve of the 1D limit problem",
    "equilibria": "multistart census of limit equilibria with hyperbolicity",
    "converge": "upper/lower semicontinuity sweep over eps",
    "check-ineq": "empirical trace-inequality constants over eps",
    "check-concentration": "concentrated-integral limit defect over eps",
    "mesh-info": "mesh sizes and quality per eps",
}

COMMANDS = {
    "cell": cmd_cell, "solve-eps": cmd_solve_eps, "solve-limit": cmd_solve_limit,
    "equilibria": cmd_equilibria, "converge": cmd_converge, "check-ineq": cmd_check_ineq,
    "check-concentration": cmd_check_concentration, "mesh-info": cmd_mesh_info,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="thinhomog", description="Thin-domain homogenization experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default=None, help="output directory (overrides out_dir)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
    return p


def manifest(cfg: ExperimentConfig, command: str, outputs: List[str]) -> str:
    doc = {"tool": "thinhomog", "version": __version__, "command": command,
           "numpy": np.__version__, "config": cfg.to_dict(), "outputs": sorted(outputs)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"thinhomog: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        over = {k: v for k, v in (("out_dir", args.out), ("seed", args.seed),
                                  ("threads", args.threads)) if v is not None}
        if over:
            cfg = cfg.replace(**over)
        text, files = COMMANDS[args.command](cfg)
        for name, content in files.items():
            write_atomic(os.path.join(cfg.out_dir, name), content)
        stem = args.command.replace("-", "_")
        write_atomic(os.path.join(cfg.out_dir, f"{stem}_manifest.json"),
                     manifest(cfg, args.command, list(files)))
    except ConfigError as exc:
        print(f"thinhomog: invalid config or geometry: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"thinhomog: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
