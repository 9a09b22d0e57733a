"""P1 finite elements on the column meshes.

Concentrated strip terms use the edge-midpoint rule on each strip triangle
(exact for quadratics). The nonlinear load evaluates ``f`` at the midpoints of
the P1 interpolant, and the Newton Jacobian uses ``f'`` at the same points, so
the Jacobian is the exact derivative of the discrete load.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import Tridiagonal, csr_from_triplets
from .mesh import ThinMesh

# basis values at the three edge midpoints (rows: points, cols: local basis)
_MID = np.array([[0.5, 0.5, 0.0],
                 [0.0, 0.5, 0.5],
                 [0.5, 0.0, 0.5]])
_LOCAL_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0

# 3-point Gauss-Legendre on [0, 1]
_G3_X = 0.5 + 0.5 * np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_G3_W = np.array([5.0, 8.0, 5.0]) / 18.0
# 4-point Gauss-Legendre on [0, 1]
_g4x, _g4w = np.polynomial.legendre.leggauss(4)
_G4_X = 0.5 * (_g4x + 1.0)
_G4_W = 0.5 * _g4w


def p1_geometry(vertices, triangles):
    """Signed areas (nt,) and basis gradients (nt, 3, 2)."""
    p = vertices[triangles]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    grads = np.stack([b, c], axis=2) / (2.0 * area)[:, None, None]
    return area, grads


def _assemble(n, triangles, local):
    t = triangles
    rows = np.repeat(t, 3, axis=1)
    cols = np.tile(t, (1, 3))
    return csr_from_triplets(n, rows, cols, local.reshape(len(t), 9))


def _select(m, elements):
    if elements is None:
        return m.triangles
    return m.triangles[elements]


def assemble_stiffness_aniso(m, eps: float = 1.0, elements=None):
    """Stiffness for the diffusion tensor ``diag(1, 1/eps**2)``."""
    tris = _select(m, elements)
    area, G = p1_geometry(m.vertices, tris)
    Gs = G * np.array([1.0, 1.0 / eps**2])
    local = area[:, None, None] * np.einsum("eik,ejk->eij", Gs, G)
    return _assemble(m.n_vertices, tris, local)


def assemble_mass(m, elements=None):
    tris = _select(m, elements)
    area, _ = p1_geometry(m.vertices, tris)
    local = area[:, None, None] * _LOCAL_MASS
    return _assemble(m.n_vertices, tris, local)


def midpoint_values(m, u, elements=None) -> np.ndarray:
    """Values of the P1 interpolant of ``u`` at edge midpoints, shape (ne, 3)."""
    tris = _select(m, elements)
    return np.asarray(u, dtype=float)[tris] @ _MID.T


def strip_matrix_qp(m: ThinMesh, eps: float, wq: np.ndarray):
    """``(1/eps) * int_strip w u v`` with ``w`` given at strip midpoints (ne, 3)."""
    tris = m.triangles[m.strip_mask]
    area, _ = p1_geometry(m.vertices, tris)
    wq = np.broadcast_to(np.asarray(wq, dtype=float), (len(tris), 3))
    local = np.einsum("eq,qi,qj->eij", wq, _MID, _MID) * (area / (3.0 * eps))[:, None, None]
    return _assemble(m.n_vertices, tris, local)


def assemble_strip_matrix(m: ThinMesh, eps: float, weight):
    """Concentrated bilinear form ``(u, v) -> (1/eps) int_strip w u v`` for a nodal weight."""
    wq = midpoint_values(m, np.broadcast_to(weight, (m.n_vertices,)), m.strip_mask)
    return strip_matrix_qp(m, eps, wq)


def strip_load_qp(m: ThinMesh, eps: float, fq: np.ndarray) -> np.ndarray:
    tris = m.triangles[m.strip_mask]
    area, _ = p1_geometry(m.vertices, tris)
    local = (fq @ _MID) * (area / (3.0 * eps))[:, None]
    b = np.zeros(m.n_vertices)
    np.add.at(b, tris.ravel(), local.ravel())
    return b


def assemble_strip_load(m: ThinMesh, eps: float, f, u) -> np.ndarray:
    """``b_i = (1/eps) int_strip f(I_h u) phi_i``."""
    uq = midpoint_values(m, np.broadcast_to(u, (m.n_vertices,)), m.strip_mask)
    return strip_load_qp(m, eps, f(uq))


def h1_eps_norm(m, u, eps: float) -> float:
    """``(||u||^2 + ||d1 u||^2 + eps**-2 ||d2 u||^2)^(1/2)`` over the mesh."""
    area, G = p1_geometry(m.vertices, m.triangles)
    grad = np.einsum("eik,ei->ek", G, np.asarray(u)[m.triangles])
    l2 = l2_norm(m, u) ** 2
    return math.sqrt(l2 + float(area @ grad[:, 0] ** 2) + float(area @ grad[:, 1] ** 2) / eps**2)


def l2_norm(m, u) -> float:
    area, _ = p1_geometry(m.vertices, m.triangles)
    ut = np.asarray(u, dtype=float)[m.triangles]
    sq = np.einsum("ei,ij,ej->e", ut, _LOCAL_MASS, ut)
    return math.sqrt(max(float(area @ sq), 0.0))


def fiber_means(m: ThinMesh, u) -> np.ndarray:
    """Per-column average ``(1/g_eps) int_0^{g_eps} u dx2`` (exact for P1 traces)."""
    y = m.vertices[m.fibers, 1]
    v = np.asarray(u)[m.fibers]
    return np.trapezoid(v, y, axis=1) / (y[:, -1] - y[:, 0])


# --- 1D limit problem -------------------------------------------------------

def assemble_1d(n: int, q0: float = 1.0):
    """``(q0 * stiffness, mass)`` of P1 on the uniform grid of ``n`` cells over (0, 1)."""
    if n < 1:
        raise ValueError("need at least one cell")
    h = 1.0 / n
    kd = np.full(n + 1, 2.0 / h)
    kd[[0, -1]] = 1.0 / h
    md = np.full(n + 1, 4.0 * h / 6.0)
    md[[0, -1]] = 2.0 * h / 6.0
    K1 = Tridiagonal(q0 * kd, np.full(n, -q0 / h))
    M1 = Tridiagonal(md, np.full(n, h / 6.0))
    return K1, M1


def _gauss_1d(u):
    u = np.asarray(u, dtype=float)
    return u[:-1, None] * (1.0 - _G3_X) + u[1:, None] * _G3_X  # (n, 3)


def load_1d(f, u) -> np.ndarray:
    """``b_i = int_0^1 f(I_h u) phi_i`` by 3-point Gauss per cell."""
    n = len(u) - 1
    fq = f(_gauss_1d(u)) * (_G3_W / n)
    b = np.zeros(n + 1)
    b[:-1] += fq @ (1.0 - _G3_X)
    b[1:] += fq @ _G3_X
    return b


def weighted_mass_1d(w, u) -> Tridiagonal:
    """``int_0^1 w(I_h u) phi_i phi_j``, same quadrature as :func:`load_1d`."""
    n = len(u) - 1
    wq = w(_gauss_1d(u)) * (_G3_W / n)
    a, b = 1.0 - _G3_X, _G3_X
    diag = np.zeros(n + 1)
    diag[:-1] += wq @ (a * a)
    diag[1:] += wq @ (b * b)
    return Tridiagonal(diag, wq @ (a * b))


# --- fractional norms on fibers ---------------------------------------------

def _adjacent_profile(alpha, beta, T, s):
    """``int_0^T (alpha + beta t)^2 (1 + t)^(-1-2s) dt`` in closed form."""
    c0 = alpha - beta
    lw = np.log1p(T)
    t1 = -np.expm1(-2.0 * s * lw) / (2.0 * s)
    t2 = lw if s == 0.5 else np.expm1((1.0 - 2.0 * s) * lw) / (1.0 - 2.0 * s)
    t3 = np.expm1((2.0 - 2.0 * s) * lw) / (2.0 - 2.0 * s)
    return c0 * c0 * t1 + 2.0 * c0 * beta * t2 + beta * beta * t3


def _check_s(s):
    if not (0.0 < s < 1.0):
        raise ValueError(f"fractional order s must lie in (0, 1), got {s}")


def fractional_seminorm_batch(values, coords, s: float) -> np.ndarray:
    """Gagliardo seminorm squared of P1 interpolants, one per row.

    ``values`` and ``coords`` have shape (F, K), coordinates strictly
    increasing along each row. Same-panel and adjacent-panel contributions are
    integrated in closed form; separated panel pairs by tensor 4-point Gauss on
    subpanels no longer than the gap between them.
    """
    _check_s(s)
    V = np.atleast_2d(np.asarray(values, dtype=float))
    Y = np.atleast_2d(np.asarray(coords, dtype=float))
    if V.shape != Y.shape or V.shape[1] < 2:
        raise ValueError("need matching (F, K) arrays with K >= 2")
    h = np.diff(Y, axis=1)
    if np.any(h <= 0):
        raise ValueError("fiber coordinates must be strictly increasing")
    mslope = np.diff(V, axis=1) / h
    P = h.shape[1]
    e = 3.0 - 2.0 * s
    total = np.sum(2.0 * mslope**2 * h**e / ((2.0 - 2.0 * s) * e), axis=1)
    if P >= 2:
        h1, h2 = h[:, :-1], h[:, 1:]
        m1, m2 = mslope[:, :-1], mslope[:, 1:]
        adj = (h1**e * _adjacent_profile(m1, m2, h2 / h1, s)
               + h2**e * _adjacent_profile(m2, m1, h1 / h2, s)) / e
        total += 2.0 * adj.sum(axis=1)
    for p in range(P):
        for q in range(p + 2, P):
            gap = Y[:, q] - Y[:, p + 1]
            n_p = int(min(64, max(1, math.ceil(np.max(h[:, p] / gap)))))
            n_q = int(min(64, max(1, math.ceil(np.max(h[:, q] / gap)))))
            tp = ((np.arange(n_p)[:, None] + _G4_X) / n_p).ravel()
            tq = ((np.arange(n_q)[:, None] + _G4_X) / n_q).ravel()
            wp = np.tile(_G4_W / n_p, n_p)
            wq = np.tile(_G4_W / n_q, n_q)
            xa = Y[:, p, None] + h[:, p, None] * tp
            ua = V[:, p, None] + (V[:, p + 1] - V[:, p])[:, None] * tp
            xb = Y[:, q, None] + h[:, q, None] * tq
            ub = V[:, q, None] + (V[:, q + 1] - V[:, q])[:, None] * tq
            diff = ua[:, :, None] - ub[:, None, :]
            dist = xb[:, None, :] - xa[:, :, None]
            kern = diff**2 / dist ** (1.0 + 2.0 * s)
            val = np.einsum("fab,a,b->f", kern, wp, wq) * h[:, p] * h[:, q]
            total += 2.0 * val
    return total


def fractional_seminorm_fiber(values, coords, s: float) -> float:
    """``int int |u(x)-u(y)|^2 / |x-y|^(1+2s)`` for the P1 interpolant on one fiber."""
    return float(fractional_seminorm_batch(values, coords, s)[0])


def fiber_l2_sq(values, coords) -> np.ndarray:
    V = np.atleast_2d(values)
    h = np.diff(np.atleast_2d(coords), axis=1)
    a, b = V[:, :-1], V[:, 1:]
    return np.sum(h * (a * a + a * b + b * b) / 3.0, axis=1)


def fiber_hs_sq(values, coords, s: float) -> np.ndarray:
    """Squared H^s norm on each fiber; ``s = 0`` gives L^2, ``s = 1`` gives H^1."""
    l2 = fiber_l2_sq(values, coords)
    if s == 0:
        return l2
    if s == 1:
        V = np.atleast_2d(values)
        h = np.diff(np.atleast_2d(coords), axis=1)
        return l2 + np.sum(np.diff(V, axis=1) ** 2 / h, axis=1)
    return l2 + fractional_seminorm_batch(values, coords, s)


def sampled_columns(n_columns: int, stride: int) -> np.ndarray:
    if stride < 1:
        raise ValueError("fiber_stride must be >= 1")
    idx = np.arange(0, n_columns, stride)
    if idx[-1] != n_columns - 1:
        idx = np.append(idx, n_columns - 1)
    return idx


def bochner_norm(m: ThinMesh, u, s: float, fiber_stride: int = 4) -> float:
    """Norm of ``u`` in ``L^2(0, 1; H^s(0, g_eps(x1)))``, trapezoid over sampled fibers."""
    cols = sampled_columns(len(m.fibers), fiber_stride)
    fib = m.fibers[cols]
    vals = np.asarray(u, dtype=float)[fib]
    y = m.vertices[fib, 1]
    sq = fiber_hs_sq(vals, y, s)
    return math.sqrt(max(float(np.trapezoid(sq, m.x1[cols])), 0.0))
