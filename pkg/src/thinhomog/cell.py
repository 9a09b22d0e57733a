"""Periodic cell problem and the homogenized diffusion coefficient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CompatibilityError
from .fem import assemble_mass, assemble_stiffness_aniso, p1_geometry
from .linalg import cg_solve
from .mesh import CellMesh, build_cell_mesh
from .profiles import ProfileSpec


@dataclass
class CellSolution:
    mesh: CellMesh
    X: np.ndarray
    q0: float
    q0_energy: float
    corrector_energy: float
    compatibility_residual: float
    mean_X: float
    cg_iterations: int
    cg_residual: float

    @property
    def discrepancy(self) -> float:
        return abs(self.q0 - self.q0_energy)


def assemble_cell_rhs(m: CellMesh) -> np.ndarray:
    """Weak right-hand side ``int_{B1} N1 phi ds`` on the faceted top boundary.

    On a top facet ``N1 ds = -slope dy1`` with the facet slope, so each edge
    contributes ``-(g_b - g_a)/2`` to both endpoints and the entries telescope
    to zero over a period.
    """
    b = np.zeros(m.n_vertices)
    ea, eb = m.top_edges[:, 0], m.top_edges[:, 1]
    rise = m.vertices[eb, 1] - m.vertices[ea, 1]
    np.add.at(b, ea, -0.5 * rise)
    np.add.at(b, eb, -0.5 * rise)
    return b


def periodic_map(m: CellMesh):
    """Sparse prolongation ``P`` (nv x nd) merging right-side nodes into left-side ones."""
    node = np.arange(m.n_vertices)
    node[m.periodic_pairs[:, 1]] = m.periodic_pairs[:, 0]
    keep, dof = np.unique(node, return_inverse=True)
    P = sp.csr_matrix((np.ones(m.n_vertices), (np.arange(m.n_vertices), dof)),
                      shape=(m.n_vertices, len(keep)))
    return P


def compatibility_residual(b: np.ndarray) -> float:
    return abs(float(np.sum(b))) / max(1.0, float(np.sum(np.abs(b))))


def solve_cell(m: CellMesh, tol: float = 1e-12) -> CellSolution:
    """Corrector ``X``: harmonic, periodic in y1, ``dX/dN = N1`` on top, zero mean."""
    b = assemble_cell_rhs(m)
    compat = compatibility_residual(b)
    if compat > 1e-10:
        raise CompatibilityError(f"cell right-hand side not compatible ({compat:.3e})")
    K = assemble_stiffness_aniso(m, 1.0)
    M = assemble_mass(m)
    P = periodic_map(m)
    Kr = (P.T @ K @ P).tocsr()
    br = P.T @ b
    # pin reduced dof 0 (bottom-left corner); the RHS is compatible
    free = np.arange(1, Kr.shape[0])
    Kf = Kr[free][:, free].tocsr()
    res = cg_solve(Kf, br[free], tol=tol)
    xr = np.zeros(Kr.shape[0])
    xr[free] = res.x
    X = P @ xr
    one = np.ones(m.n_vertices)
    area = float(one @ (M @ one))
    X -= float(one @ (M @ X)) / area
    q0, q0_energy, energy = _q0_forms(m, X, area)
    return CellSolution(m, X, q0, q0_energy, energy, compat, float(one @ (M @ X)),
                        res.iterations, res.residual)


def _q0_forms(m: CellMesh, X: np.ndarray, area: float):
    a, G = p1_geometry(m.vertices, m.triangles)
    grad = np.einsum("eik,ei->ek", G, X[m.triangles])
    q_avg = float(a @ (1.0 - grad[:, 0])) / area
    energy = float(a @ (grad[:, 0] ** 2 + grad[:, 1] ** 2))
    return q_avg, (area - energy) / area, energy


def homogenized_q0(sol: CellSolution):
    """Return ``(q0 from the average of 1 - dX/dy1, q0 from the energy form, discrepancy)``."""
    area = float(sol.mesh.areas.sum())
    q_avg, q_en, _ = _q0_forms(sol.mesh, sol.X, area)
    return q_avg, q_en, abs(q_avg - q_en)


def q0_for_profile(g: ProfileSpec, columns: int = 64, rows: int | None = None,
                   diagonal: str = "right") -> float:
    return solve_cell(build_cell_mesh(g, columns, rows, diagonal)).q0


def richardson_q0(g: ProfileSpec, levels=(32, 64, 128), diagonal: str = "right",
                  rows_ratio: float = 1.0):
    """q0 on successive refinements and the second-order Richardson extrapolation.

    Level ``n`` uses ``n`` columns and ``round(rows_ratio * n)`` rows.
    Returns ``(values, extrapolated, observed_order)``.
    """
    vals = np.array([q0_for_profile(g, n, max(1, int(round(rows_ratio * n))), diagonal)
                     for n in levels])
    extrap = vals[-1] + (vals[-1] - vals[-2]) / 3.0
    order = np.nan
    if len(vals) >= 3:
        d1, d2 = vals[-2] - vals[-3], vals[-1] - vals[-2]
        if d1 != 0 and d2 != 0 and d1 / d2 > 0:
            order = float(np.log2(d1 / d2))
    return vals, float(extrap), order
