"""Fiber extension, E-distances, concentrated integrals and the three experiment suites.

All suites loop over a decreasing list of thicknesses ``eps``; per-eps work is
independent and may run on a thread pool, results are merged in eps order.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cell import q0_for_profile
from .config import ExperimentConfig
from .errors import SolverError
from .fem import (_G4_W, _G4_X, assemble_mass, assemble_stiffness_aniso, bochner_norm,
                  h1_eps_norm, l2_norm, midpoint_values, p1_geometry)
from .mesh import MeshResolution, ThinMesh, build_thin_mesh
from .profiles import HomogenizedData, Nonlinearity, ProfileSpec
from .solvers import SolveResult, find_equilibria_limit, hyperbolicity, newton_eps


# --- tables -------------------------------------------------------------------

@dataclass
class ConvergenceTable:
    """Rows ``(eps, N, metric, value)``; ratios compare consecutive eps levels of a metric."""

    rows: List[Tuple[float, int, str, float]] = field(default_factory=list)

    def add(self, eps: float, N: int, metric: str, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite value for {metric} at eps={eps}")
        self.rows.append((float(eps), int(N), metric, value))

    def extend(self, other: "ConvergenceTable") -> None:
        self.rows.extend(other.rows)

    def sorted_rows(self):
        # stable: metric order inside one eps level is insertion order
        return sorted(self.rows, key=lambda r: -r[0])

    @property
    def metrics(self) -> List[str]:
        seen = []
        for r in self.rows:
            if r[2] not in seen:
                seen.append(r[2])
        return seen

    def series(self, metric: str) -> Tuple[np.ndarray, np.ndarray]:
        sel = [r for r in self.sorted_rows() if r[2] == metric]
        return np.array([r[0] for r in sel]), np.array([r[3] for r in sel])

    def ratios(self) -> List[Optional[float]]:
        """``value(previous, larger eps) / value`` of the same metric; None on its first row."""
        last: Dict[str, float] = {}
        out = []
        for _, _, metric, value in self.sorted_rows():
            prev = last.get(metric)
            out.append(None if prev is None or value == 0.0 else prev / value)
            last[metric] = value
        return out

    def decreasing(self, metric: str, factor: float = 1.2) -> bool:
        """Strictly decreasing over the eps levels and ``first / last >= factor``."""
        _, v = self.series(metric)
        if len(v) < 2:
            return False
        strict = bool(np.all(np.diff(v) < 0))
        if v[-1] == 0.0:
            return strict
        return strict and v[0] / v[-1] >= factor

    def improvement(self, metric: str) -> float:
        _, v = self.series(metric)
        return math.inf if v[-1] == 0.0 else float(v[0] / v[-1])

    def to_csv(self) -> str:
        lines = ["eps,N,metric,value,ratio"]
        for (eps, N, metric, value), ratio in zip(self.sorted_rows(), self.ratios()):
            rat = "" if ratio is None else format(ratio, ".17g")
            lines.append(f"{eps:.17g},{N},{metric},{value:.17g},{rat}")
        return "\n".join(lines) + "\n"


@dataclass
class InequalityReport:
    eps: List[float]
    N: List[int]
    ratios_h1: List[np.ndarray]
    ratios_hs: List[np.ndarray]
    s: float
    factor: float = 2.0

    @property
    def max_h1(self) -> np.ndarray:
        return np.array([r.max() for r in self.ratios_h1])

    @property
    def max_hs(self) -> np.ndarray:
        return np.array([r.max() for r in self.ratios_hs])

    @property
    def spread_h1(self) -> float:
        """max ratio at the smallest eps over max ratio at the largest."""
        return float(self.max_h1[-1] / self.max_h1[0])

    @property
    def spread_hs(self) -> float:
        return float(self.max_hs[-1] / self.max_hs[0])

    @property
    def bounded(self) -> bool:
        return self.spread_h1 <= self.factor and self.spread_hs <= self.factor

    def table(self) -> ConvergenceTable:
        t = ConvergenceTable()
        for e, n, a, b in zip(self.eps, self.N, self.max_h1, self.max_hs):
            t.add(e, n, "max_ratio_H1", a)
            t.add(e, n, f"max_ratio_Hs{self.s:g}", b)
        return t


# --- extension and distances ----------------------------------------------------

def _as_function(u0) -> Callable:
    """Callable of x1 from a callable or from nodal values on a uniform grid of (0, 1)."""
    if callable(u0):
        return lambda x: np.broadcast_to(np.asarray(u0(x), dtype=float), np.shape(x))
    vals = np.atleast_1d(np.asarray(u0, dtype=float))
    if len(vals) == 1:
        return lambda x: np.full(np.shape(x), vals[0])
    grid = np.linspace(0.0, 1.0, len(vals))
    return lambda x: np.interp(x, grid, vals)


def extend_E(m: ThinMesh, u0) -> np.ndarray:
    """Fiber-constant extension ``(E u0)(x1, x2) = u0(x1)``, ``u0`` sampled at column abscissae."""
    col = _as_function(u0)(m.x1)
    return np.repeat(col, m.fibers.shape[1])


def extension_l2_sq(m: ThinMesh, u0) -> float:
    """``int_0^1 top(x1) u0(x1)^2`` with the piecewise linear top and interpolated ``u0``.

    Equals ``||E u0||^2`` over the mesh exactly.
    """
    col = _as_function(u0)(m.x1)
    dx = np.diff(m.x1)
    t = _G4_X
    top = m.top[:-1, None] * (1 - t) + m.top[1:, None] * t
    uu = col[:-1, None] * (1 - t) + col[1:, None] * t
    return float(np.sum(dx[:, None] * _G4_W * top * uu**2))


def e_distance(m: ThinMesh, u_eps, u0, norm="L2", s: float = 0.75, fiber_stride: int = 4) -> float:
    """``||u_eps - E u0||`` in L^2(Omega_eps) or in the fiberwise H^s Bochner norm.

    ``norm`` is ``"L2"``, ``"Hs"`` (with ``s``) or a tuple ``("Hs", s)``.
    """
    if isinstance(norm, tuple):
        norm, s = norm
    d = np.asarray(u_eps, dtype=float) - extend_E(m, u0)
    if norm == "L2":
        return l2_norm(m, d)
    if norm == "Hs":
        if not 0.5 < s < 1.0:
            raise ValueError("the Bochner distance needs 1/2 < s < 1")
        return bochner_norm(m, d, s, fiber_stride)
    raise ValueError(f"unknown norm {norm!r}")


def _strip_qp(m: ThinMesh, u):
    tris = m.triangles[m.strip_mask]
    area, _ = p1_geometry(m.vertices, tris)
    return area, midpoint_values(m, u, m.strip_mask)


def concentrated_integral(m: ThinMesh, eps: float, u, q: float = 2.0) -> float:
    """``(1/eps) int_strip |I_h u|^q`` by the 3-point edge-midpoint rule per triangle."""
    if q < 1:
        raise ValueError("q must be >= 1")
    area, uq = _strip_qp(m, np.broadcast_to(np.asarray(u, dtype=float), (m.n_vertices,)))
    return float(np.sum(area[:, None] * np.abs(uq) ** q) / (3.0 * eps))


def concentrated_functional(m: ThinMesh, eps: float, f: Nonlinearity, u, phi) -> float:
    """``(1/eps) int_strip f(u) phi`` with ``phi`` a function of x1 only."""
    area, uq = _strip_qp(m, np.broadcast_to(np.asarray(u, dtype=float), (m.n_vertices,)))
    _, pq = _strip_qp(m, extend_E(m, phi))
    return float(np.sum(area[:, None] * f(uq) * pq) / (3.0 * eps))


def limit_functional(mu_h: float, f: Nonlinearity, u0, phi, cells: int = 512) -> float:
    """``mu_h int_0^1 f(u0) phi`` by composite 4-point Gauss."""
    x = (np.arange(cells)[:, None] + _G4_X) / cells
    uf, pf = _as_function(u0), _as_function(phi)
    return float(mu_h * np.sum(_G4_W * f(uf(x)) * pf(x)) / cells)


def uniform_bound_ratio(m: ThinMesh, eps: float, u, f: Nonlinearity) -> float:
    """``||u||_{H^1_eps} / (sup|f| sqrt(h1))``; bounded in eps for solutions of the thin problem."""
    _, h1 = m.h.bounds()
    denom = f.sup_abs() * math.sqrt(h1)
    return h1_eps_norm(m, u, eps) / denom if denom > 0 else 0.0


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _rngs(seed: int, n: int):
    return [np.random.default_rng(ss) for ss in np.random.SeedSequence(seed).spawn(n)]


# --- trace-type inequalities --------------------------------------------------

def boundary_layer_field(m: ThinMesh, eps: float, c: float) -> np.ndarray:
    """``exp(-(g_eps(x1) - x2) / (c eps))`` at the nodes."""
    top = np.repeat(m.top, m.fibers.shape[1])
    return np.exp(-(top - m.vertices[:, 1]) / (c * eps))


def check_trace_inequality(g: ProfileSpec, h: ProfileSpec, beta: float, eps_list: Sequence[float],
                           trials: int = 50, s: float = 0.75, boundary_layer: int = 10,
                           res: MeshResolution = MeshResolution(), seed: int = 0,
                           threads: int = 1, factor: float = 2.0) -> InequalityReport:
    """Ratios ``(1/eps) int_strip |u|^2`` over ``||u||^2_{H^1}`` and over the squared fiberwise
    ``H^s`` Bochner norm, for standard normal nodal fields plus boundary-layer fields."""
    if trials + boundary_layer < 1:
        raise ValueError("need at least one trial field")
    rngs = _rngs(seed, len(eps_list))
    layer_c = np.geomspace(0.25, 64.0, boundary_layer) if boundary_layer else []

    def one(k):
        eps = eps_list[k]
        m = build_thin_mesh(g, h, eps, beta, res)
        H1 = (assemble_stiffness_aniso(m, 1.0) + assemble_mass(m)).tocsr()
        fields = [rngs[k].standard_normal(m.n_vertices) for _ in range(trials)]
        fields += [boundary_layer_field(m, eps, c) for c in layer_c]
        r1, rs = [], []
        for u in fields:
            num = concentrated_integral(m, eps, u, 2.0)
            r1.append(num / float(u @ (H1 @ u)))
            rs.append(num / bochner_norm(m, u, s, fiber_stride=1) ** 2)
        return m.N, np.array(r1), np.array(rs)

    out = _map(one, range(len(eps_list)), threads)
    return InequalityReport(list(map(float, eps_list)), [o[0] for o in out],
                            [o[1] for o in out], [o[2] for o in out], s, factor)


# --- concentration limits ----------------------------------------------------------

def check_concentration_limit(g: ProfileSpec, h: ProfileSpec, beta: float, eps_list: Sequence[float],
                              f: Nonlinearity, u0, phi, mode: str = "quadrature",
                              res: MeshResolution = MeshResolution(), tol: float = 1e-10,
                              max_newton: int = 30, threads: int = 1) -> ConvergenceTable:
    """``delta(eps) = |(1/eps) int_strip f(u_eps) phi - mu_h int_0^1 f(u0) phi|``.

    ``mode="quadrature"`` takes ``u_eps = E u0``; ``mode="solver"`` solves the
    thin problem by Newton from ``E u0``, so ``u0`` should be a limit solution.
    """
    if mode not in ("quadrature", "solver"):
        raise ValueError("mode must be 'quadrature' or 'solver'")
    target = limit_functional(h.mean(), f, u0, phi)

    def one(eps):
        m = build_thin_mesh(g, h, eps, beta, res)
        u = extend_E(m, u0)
        if mode == "solver":
            u = newton_eps(m, eps, f, u, tol=tol, max_newton=max_newton).solution
        return m.N, abs(concentrated_functional(m, eps, f, u, phi) - target)

    t = ConvergenceTable()
    for eps, (N, delta) in zip(eps_list, _map(one, list(eps_list), threads)):
        t.add(eps, N, "delta", delta)
    return t


# --- upper / lower semicontinuity ---------------------------------------------------

@dataclass
class SemicontinuityReport:
    table: ConvergenceTable
    limit_means: List[float]
    min_abs_eigenvalues: List[float]
    all_hyperbolic: bool
    failures: Dict[float, int]
    found: Dict[float, int]
    warnings: List[str] = field(default_factory=list)

    @property
    def lower_decreasing(self) -> bool:
        return self.table.decreasing("dist_lower_L2")

    @property
    def upper_decreasing(self) -> bool:
        return self.table.decreasing("dist_upper_L2")


def limit_data(cfg: ExperimentConfig) -> HomogenizedData:
    q0 = cfg.q0 if cfg.q0 is not None else q0_for_profile(cfg.g, cfg.cell_columns)
    hd = HomogenizedData.from_profiles(cfg.g, cfg.h, q0)
    if cfg.f0_scale is not None:
        hd = HomogenizedData(hd.q0, hd.mu_g, hd.mu_h, hd.cell_area, float(cfg.f0_scale))
    return hd


def smooth_random_start(rng: np.random.Generator, m: ThinMesh, R: float) -> np.ndarray:
    """``c + sum_k a_k cos(k pi x1)``, k = 1..3, extended along fibers."""
    c = rng.uniform(-0.5 * R, 0.5 * R)
    a = rng.normal(0.0, 0.2, 3) / np.arange(1, 4)
    col = c + sum(a[k] * np.cos((k + 1) * np.pi * m.x1) for k in range(3))
    return np.repeat(col, m.fibers.shape[1])


def _unique(solutions: List[np.ndarray], m: ThinMesh, tol: float = 1e-6) -> List[np.ndarray]:
    out: List[np.ndarray] = []
    for u in solutions:
        if all(np.max(np.abs(u - v)) > tol for v in out):
            out.append(u)
    return out


def semicontinuity_experiment(cfg: ExperimentConfig, hd: Optional[HomogenizedData] = None,
                              hs_metrics: bool = True) -> SemicontinuityReport:
    """Compare the thin-domain equilibria with the extended limit equilibria across ``eps``.

    Lower part: Newton from ``E u0`` for every hyperbolic limit equilibrium.
    Upper part: the same starts plus ``cfg.random_starts`` smooth random
    fields. The set of thin-domain equilibria found this way is a subset of the
    true one, so ``dist_upper`` is a lower bound of the Hausdorff semi-distance.
    """
    hd = limit_data(cfg) if hd is None else hd
    f = cfg.nonlinearity
    eq = find_equilibria_limit(cfg.limit_cells, hd, f, multistart=cfg.multistart, tol=cfg.newton_tol)
    notes = []
    if not eq:
        raise SolverError("no limit equilibrium found")
    reports = [hyperbolicity(e.solution, hd, f) for e in eq]
    hyper = [r.hyperbolic for r in reports]
    if not all(hyper):
        notes.append("degenerate case: some limit equilibria are not hyperbolic")
        warnings.warn(notes[-1])
    limits = [e.solution for e, ok in zip(eq, hyper) if ok]
    if not limits:
        raise SolverError("no hyperbolic limit equilibrium")
    rngs = _rngs(cfg.seed, len(cfg.eps_list))

    def one(k):
        eps = cfg.eps_list[k]
        m = build_thin_mesh(cfg.g, cfg.h, eps, cfg.beta, cfg.resolution)
        starts = [extend_E(m, u0) for u0 in limits]
        starts += [smooth_random_start(rngs[k], m, f.R) for _ in range(cfg.random_starts)]
        sols: List[Optional[SolveResult]] = []
        for u_init in starts:
            try:
                sols.append(newton_eps(m, eps, f, u_init, tol=cfg.newton_tol, max_newton=cfg.max_newton))
            except SolverError:
                sols.append(None)
        return m, sols

    results = _map(one, range(len(cfg.eps_list)), cfg.threads)
    table = ConvergenceTable()
    failures, found = {}, {}
    for eps, (m, sols) in zip(cfg.eps_list, results):
        failures[eps] = sum(s is None for s in sols)
        inside = [s.solution for s in sols if s is not None and s.R_bound_ok]
        if not inside:
            raise SolverError(f"no thin-domain start converged at eps={eps}")
        pool = _unique(inside, m)
        found[eps] = len(pool)
        D = np.array([[e_distance(m, u, u0) for u0 in limits] for u in pool])
        # lower rows: the solution continued from E u0 itself
        for j, u0 in enumerate(limits):
            if sols[j] is not None:
                table.add(eps, m.N, f"lower_L2[u0={float(np.mean(u0)):+.5f}]",
                          e_distance(m, sols[j].solution, u0))
        table.add(eps, m.N, "dist_lower_L2", float(D.min(axis=0).max()))
        table.add(eps, m.N, "dist_upper_L2", float(D.min(axis=1).max()))
        if hs_metrics:
            Ds = np.array([[e_distance(m, u, u0, "Hs", cfg.s, cfg.fiber_stride) for u0 in limits]
                           for u in pool])
            table.add(eps, m.N, f"dist_lower_Hs{cfg.s:g}", float(Ds.min(axis=0).max()))
            table.add(eps, m.N, f"dist_upper_Hs{cfg.s:g}", float(Ds.min(axis=1).max()))
        table.add(eps, m.N, "h1eps_bound_ratio", max(uniform_bound_ratio(m, eps, u, f) for u in pool))
    means = [float(e.mean) for e in eq]
    return SemicontinuityReport(table, means, [r.min_abs_eigenvalue for r in reports],
                                all(hyper), failures, found, notes)
