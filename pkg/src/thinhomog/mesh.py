"""Structured strip-conforming triangulations.

Both meshes are built column by column: vertical fibers of nodes at uniformly
spaced abscissae, neighbouring fibers joined by quads that are split along a
fixed diagonal. In the thin-domain mesh every fiber carries a node exactly on
the strip interface ``x2 = g_eps - eps*h_eps``, so the strip is a union of
elements and its indicator is elementwise constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, GeometryError, StripOverflowError
from .profiles import ProfileSpec


@dataclass(frozen=True)
class MeshResolution:
    points_per_period: int = 10
    bulk_rows: int = 4
    strip_rows: int = 2
    refinement_level: int = 0
    columns: Optional[int] = None  # explicit column count, bypasses the oscillation rule

    def __post_init__(self):
        if self.points_per_period < 4:
            raise ConfigError("points_per_period must be >= 4")
        if self.bulk_rows < 2 or self.strip_rows < 2:
            raise ConfigError("bulk_rows and strip_rows must be >= 2")
        if self.refinement_level < 0:
            raise ConfigError("refinement_level must be >= 0")
        if self.columns is not None and self.columns < 1:
            raise ConfigError("columns must be positive")

    @property
    def factor(self) -> int:
        return 2**self.refinement_level

    def column_count(self, g: ProfileSpec, h: ProfileSpec, eps: float, beta: float) -> int:
        if self.columns is not None:
            return self.columns * self.factor
        per_unit = max(1.0 / (eps * g.period), 1.0 / (eps**beta * h.period))
        return int(math.ceil(self.points_per_period * per_unit - 1e-9)) * self.factor

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("points_per_period", "bulk_rows", "strip_rows", "refinement_level", "columns")}


def _quad_triangles(ncols: int, nrows: int, diagonal: str) -> np.ndarray:
    """Triangles of a (ncols x nrows)-quad column grid with node id ``i*(nrows+1)+j``."""
    k = nrows + 1
    i, j = np.meshgrid(np.arange(ncols), np.arange(nrows), indexing="ij")
    v00 = (i * k + j).ravel()
    v01 = v00 + 1
    v10 = v00 + k
    v11 = v10 + 1
    if diagonal == "right":
        t1 = np.stack([v00, v10, v11], axis=1)
        t2 = np.stack([v00, v11, v01], axis=1)
    elif diagonal == "left":
        t1 = np.stack([v00, v10, v01], axis=1)
        t2 = np.stack([v10, v11, v01], axis=1)
    else:
        raise ConfigError(f"diagonal must be 'right' or 'left', got {diagonal!r}")
    # interleave so the two halves of a quad are adjacent in element order
    return np.stack([t1, t2], axis=1).reshape(-1, 3)


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True, eq=False)
class ThinMesh:
    """Triangulation of ``{0 < x1 < 1, 0 < x2 < g_eps(x1)}``.

    ``fibers[i]`` lists the node ids of column ``i`` bottom to top; row
    ``bulk_rows`` is the interface, the last row the boundary curve.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    strip_mask: np.ndarray
    fibers: np.ndarray
    x1: np.ndarray
    top: np.ndarray
    interface: np.ndarray
    N: int
    bulk_rows: int
    strip_rows: int
    eps: float
    beta: float
    g: ProfileSpec
    h: ProfileSpec

    @property
    def strip_elements(self) -> np.ndarray:
        return np.flatnonzero(self.strip_mask)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    @property
    def strip_nodes(self) -> np.ndarray:
        return np.unique(self.triangles[self.strip_mask])

    def strip_area(self) -> float:
        return float(self.areas[self.strip_mask].sum())


@dataclass(frozen=True, eq=False)
class CellMesh:
    """Triangulation of the periodicity cell ``{0 < y1 < L_g, 0 < y2 < g(y1)}``."""

    vertices: np.ndarray
    triangles: np.ndarray
    periodic_pairs: np.ndarray  # (rows+1, 2): left node id, right node id
    top_edges: np.ndarray
    bottom_edges: np.ndarray
    fibers: np.ndarray
    columns: int
    rows: int
    period: float
    g: ProfileSpec

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)


def admissible_eps(g: ProfileSpec, h: ProfileSpec) -> float:
    """Supremum of admissible eps: the strip fits while ``eps*h1 < g0``."""
    g0, _ = g.bounds()
    _, h1 = h.bounds()
    return math.inf if h1 == 0 else g0 / h1


def build_thin_mesh(g: ProfileSpec, h: ProfileSpec, eps: float, beta: float = 1.0,
                    res: MeshResolution = MeshResolution(), diagonal: str = "right") -> ThinMesh:
    """Strip-conforming mesh of the rescaled thin domain at thickness ``eps``."""
    if not eps > 0:
        raise GeometryError("eps must be positive")
    if not beta > 0:
        raise GeometryError("beta must be positive")
    g0, _ = g.bounds()
    _, h1 = h.bounds()
    if eps * h1 >= g0:
        raise StripOverflowError(f"strip overflows the domain: eps*h1 = {eps * h1:.6g} >= g0 = {g0:.6g}")

    n = res.column_count(g, h, eps, beta)
    mb = res.bulk_rows * res.factor
    ms = res.strip_rows * res.factor
    x1 = np.arange(n + 1) / n
    top = g(x1 / eps)
    width = eps * h(x1 / eps**beta)
    interface = top - width
    if np.any(interface <= 0.0):
        raise GeometryError("degenerate column: strip interface at or below x2 = 0")

    t_bulk = np.arange(mb + 1) / mb
    t_strip = np.arange(1, ms + 1) / ms
    x2 = np.concatenate([np.outer(interface, t_bulk),
                         interface[:, None] + np.outer(width, t_strip)], axis=1)
    x2[:, -1] = top  # exact boundary node
    k = mb + ms + 1
    verts = np.column_stack([np.repeat(x1, k), x2.ravel()])
    tris = _quad_triangles(n, mb + ms, diagonal)
    # quads in rows >= mb lie above the interface of both their columns
    row_of_quad = np.tile(np.arange(mb + ms), n)
    strip_mask = np.repeat(row_of_quad >= mb, 2)
    fibers = np.arange((n + 1) * k).reshape(n + 1, k)
    return ThinMesh(verts, tris, strip_mask, fibers, x1, top, interface, n, mb, ms,
                    float(eps), float(beta), g, h)


def build_cell_mesh(g: ProfileSpec, columns: int = 32, rows: Optional[int] = None,
                    diagonal: str = "right") -> CellMesh:
    """Column mesh of ``Y*`` with ``columns`` quads across one period and ``rows`` up each fiber."""
    rows = columns if rows is None else rows
    if columns < 2 or rows < 1:
        raise ConfigError("cell mesh needs columns >= 2 and rows >= 1")
    L = g.period
    y1 = L * np.arange(columns + 1) / columns
    top = g(y1)
    top[-1] = top[0]  # exact periodicity of the lateral sides
    k = rows + 1
    y2 = np.outer(top, np.arange(k) / rows)
    verts = np.column_stack([np.repeat(y1, k), y2.ravel()])
    tris = _quad_triangles(columns, rows, diagonal)
    fibers = np.arange((columns + 1) * k).reshape(columns + 1, k)
    pairs = np.column_stack([fibers[0], fibers[-1]])
    top_edges = np.column_stack([fibers[:-1, -1], fibers[1:, -1]])
    bottom_edges = np.column_stack([fibers[:-1, 0], fibers[1:, 0]])
    return CellMesh(verts, tris, pairs, top_edges, bottom_edges, fibers, columns, rows, L, g)


def cell_mesh_from_resolution(g: ProfileSpec, res: MeshResolution, diagonal: str = "right") -> CellMesh:
    """Cell mesh with ``points_per_period`` columns and ``bulk_rows + strip_rows`` rows, refined."""
    cols = (res.columns or res.points_per_period) * res.factor
    rows = (res.bulk_rows + res.strip_rows) * res.factor
    return build_cell_mesh(g, cols, rows, diagonal)


@dataclass
class QualityReport:
    min_angle: float
    max_angle: float
    min_area: float
    max_area: float
    aspect_bins: np.ndarray
    aspect_counts: np.ndarray


def mesh_quality(m) -> QualityReport:
    """Angle, area and aspect-ratio statistics (angles in degrees)."""
    p = m.vertices[m.triangles]
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    L = np.linalg.norm(e, axis=2)
    a, b, c = L[:, 0], L[:, 1], L[:, 2]
    ang = np.degrees(np.stack([
        np.arccos(np.clip((b**2 + c**2 - a**2) / (2 * b * c), -1, 1)),
        np.arccos(np.clip((a**2 + c**2 - b**2) / (2 * a * c), -1, 1)),
        np.arccos(np.clip((a**2 + b**2 - c**2) / (2 * a * b), -1, 1)),
    ], axis=1))
    area = triangle_areas(m.vertices, m.triangles)
    # circumradius / (2 * inradius): 1 for equilateral
    semi = 0.5 * (a + b + c)
    aspect = (a * b * c / (4 * area)) / (2 * area / semi)
    bins = np.array([1.0, 1.5, 2.0, 3.0, 5.0, 10.0, np.inf])
    counts, _ = np.histogram(aspect, bins=bins)
    return QualityReport(float(ang.min()), float(ang.max()), float(area.min()),
                         float(area.max()), bins, counts)


def edge_counts(triangles: np.ndarray) -> dict:
    """Map each undirected edge to the number of triangles containing it."""
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e = np.sort(e, axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    return {tuple(int(v) for v in edge): int(cnt) for edge, cnt in zip(uniq, counts)}
