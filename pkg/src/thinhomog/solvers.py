"""Newton solvers for the thin-domain problem and its 1D limit, equilibria search
and hyperbolicity of limit equilibria."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import NonConvergenceError, SolverError, StagnationError
from .fem import (assemble_1d, assemble_mass, assemble_stiffness_aniso, load_1d,
                  midpoint_values, strip_load_qp, strip_matrix_qp, weighted_mass_1d)
from .linalg import cg_solve, solve_symmetric, tridiag_gen_eigs
from .mesh import ThinMesh
from .profiles import HomogenizedData, Nonlinearity


@dataclass
class SolveResult:
    solution: np.ndarray
    residual_history: List[float]
    iterations: int
    converged: bool
    linf_norm: float
    R_bound_ok: bool
    linear_methods: List[str] = field(default_factory=list)
    noise_floor: float = 0.0  # roundoff level of the residual evaluation at the solution

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    @property
    def mean(self) -> float:
        """Mean over (0, 1) for 1D solutions on the uniform grid (trapezoid)."""
        u = self.solution
        return float(np.trapezoid(u, dx=1.0 / (len(u) - 1)))


@dataclass
class HyperbolicityReport:
    eigenvalues: np.ndarray
    min_abs_eigenvalue: float
    hyperbolic: bool


def _damped_newton(u, residual: Callable, step: Callable, tol: float, max_newton: int,
                   max_halvings: int = 8):
    """Generic damped Newton: ``step(u, r)`` returns (delta, linear_method)."""
    r = residual(u)
    rn = float(np.linalg.norm(r))
    history = [rn]
    target = tol * (1.0 + rn)
    methods = []
    for it in range(max_newton + 1):
        if rn <= target:
            return u, history, it, methods
        if it == max_newton:
            break
        delta, how = step(u, r)
        methods.append(how)
        lam = 1.0
        for _ in range(max_halvings + 1):
            u_try = u + lam * delta
            r_try = residual(u_try)
            rn_try = float(np.linalg.norm(r_try))
            if rn_try < rn:
                break
            lam *= 0.5
        else:
            raise StagnationError("line search failed to reduce the residual",
                                  residual=rn, history=history)
        u, r, rn = u_try, r_try, rn_try
        history.append(rn)
    raise NonConvergenceError(f"Newton did not converge in {max_newton} iterations",
                              residual=rn, history=history)


def thin_operator(m: ThinMesh, eps: float):
    """``K_aniso + M``, the discrete realization of the linear part."""
    return (assemble_stiffness_aniso(m, eps) + assemble_mass(m)).tocsr()


def solve_linear_eps(m: ThinMesh, eps: float, rhs, tol: float = 1e-10) -> SolveResult:
    """Solve ``(K_aniso + M) u = M rhs``."""
    A = thin_operator(m, eps)
    b = assemble_mass(m) @ np.broadcast_to(np.asarray(rhs, dtype=float), (m.n_vertices,))
    res = cg_solve(A, b, tol=tol)
    linf = float(np.max(np.abs(res.x))) if len(res.x) else 0.0
    return SolveResult(res.x, [res.residual], res.iterations, True, linf, True, ["cg"])


def _noise_floor(A, u) -> float:
    """``eps_mach * || |A| |u| ||``: residuals below this are roundoff."""
    return float(np.finfo(float).eps * np.linalg.norm(abs(A) @ np.abs(u)))


def thin_residual(m: ThinMesh, eps: float, f: Nonlinearity, A=None):
    A = thin_operator(m, eps) if A is None else A
    mask = m.strip_mask

    def residual(u):
        return A @ u - strip_load_qp(m, eps, f(midpoint_values(m, u, mask)))

    def jacobian(u):
        return (A - strip_matrix_qp(m, eps, f.df(midpoint_values(m, u, mask)))).tocsr()

    return residual, jacobian


def forcing_term(rnorm: float, floor: float = 1e-8) -> float:
    """Relative tolerance for the inner linear solve; ~||R|| keeps the quadratic tail."""
    return min(1e-2, max(floor, rnorm))


def newton_eps(m: ThinMesh, eps: float, f: Nonlinearity, u_init, tol: float = 1e-10,
               max_newton: int = 30, lin_floor: float = 1e-8) -> SolveResult:
    """Damped Newton for ``(K_aniso + M) u = F_eps(u)`` on the thin mesh.

    Linear steps are solved inexactly by CG (CG on the normal equations where
    the Jacobian is indefinite) to relative accuracy :func:`forcing_term`.
    """
    A = thin_operator(m, eps)
    residual, jacobian = thin_residual(m, eps, f, A)

    u0 = np.array(np.broadcast_to(np.asarray(u_init, dtype=float), (m.n_vertices,)))
    target = tol * (1.0 + float(np.linalg.norm(residual(u0))))

    def step(u, r):
        rn = float(np.linalg.norm(r))
        # constant f: the problem is linear, one step solved to the Newton target
        eta = min(0.5, 0.5 * target / rn) if f.is_constant else forcing_term(rn, lin_floor)
        sol = solve_symmetric(jacobian(u), -r, tol=eta)
        return sol.x, sol.method

    u, hist, its, methods = _damped_newton(u0, residual, step, tol, max_newton)
    linf = float(np.max(np.abs(u)))
    return SolveResult(u, hist, its, True, linf, linf <= f.R, methods, _noise_floor(A, u))


def limit_residual(hd: HomogenizedData, f: Nonlinearity, n: int):
    K1, M1 = assemble_1d(n, hd.q0)
    A = K1 + M1

    def residual(u):
        return A @ u - hd.f0_scale * load_1d(f, u)

    def jacobian(u):
        return A - weighted_mass_1d(f.df, u).scaled(hd.f0_scale)

    residual.operator = A
    return residual, jacobian


def newton_limit(n: int, hd: HomogenizedData, f: Nonlinearity, u_init, tol: float = 1e-10,
                 max_newton: int = 50) -> SolveResult:
    """Damped Newton for ``-q0 u'' + u = f0_scale f(u)`` with Neumann ends, ``n`` cells."""
    if not hd.q0 > 0:
        raise ValueError("q0 must be positive")
    residual, jacobian = limit_residual(hd, f, n)

    def step(u, r):
        return solve_banded((1, 1), jacobian(u).banded(), -r), "banded"

    u0 = np.array(np.broadcast_to(np.asarray(u_init, dtype=float), (n + 1,)))
    u, hist, its, methods = _damped_newton(u0, residual, step, tol, max_newton)
    linf = float(np.max(np.abs(u)))
    floor = _noise_floor(residual.operator.to_sparse(), u)
    return SolveResult(u, hist, its, True, linf, linf <= f.R, methods, floor)


class EquilibriaList(list):
    """Equilibria sorted by mean, plus bookkeeping about the multistart."""

    n_starts: int = 0
    n_failed: int = 0
    n_outside: int = 0


def find_equilibria_limit(n: int, hd: HomogenizedData, f: Nonlinearity, R: Optional[float] = None,
                          multistart: int = 9, tol: float = 1e-10,
                          dedup: float = 1e-6) -> EquilibriaList:
    """Multistart Newton census of limit equilibria with ``||u||_inf <= R``.

    Starts are ``multistart`` constants spread over ``[-R, R]`` and the same
    constants perturbed by ``+-0.1 cos(pi x)``.
    """
    if multistart < 3:
        raise ValueError("multistart must be >= 3")
    R = f.R if R is None else R
    x = np.linspace(0.0, 1.0, n + 1)
    bump = 0.1 * np.cos(np.pi * x)
    starts = []
    for c in np.linspace(-R, R, multistart):
        starts += [np.full(n + 1, c), c + bump, c - bump]
    found = EquilibriaList()
    found.n_starts = len(starts)
    for u_init in starts:
        try:
            res = newton_limit(n, hd, f, u_init, tol=tol)
        except SolverError:
            found.n_failed += 1
            continue
        if res.linf_norm > R * (1 + 1e-12):
            found.n_outside += 1
            continue
        if all(np.max(np.abs(res.solution - o.solution)) > dedup for o in found):
            found.append(res)
    found.sort(key=lambda r: r.mean)
    return found


def hyperbolicity(u0, hd: HomogenizedData, f: Nonlinearity, gap_tol: float = 1e-8) -> HyperbolicityReport:
    """Spectrum of the linearization ``-q0 v'' + v - f0_scale f'(u0) v = lam v`` (Neumann)."""
    u0 = np.asarray(u0, dtype=float)
    K1, M1 = assemble_1d(len(u0) - 1, hd.q0)
    pencil = K1 + M1 - weighted_mass_1d(f.df, u0).scaled(hd.f0_scale)
    lam = tridiag_gen_eigs(pencil, M1)
    mn = float(np.min(np.abs(lam)))
    return HyperbolicityReport(lam, mn, mn > gap_tol)


def quadratic_tail_constant(history, last: int = 3, floor: float = 0.0) -> float:
    """max of ``r_{k+1} / r_k**2`` over the last ``last`` Newton steps.

    Steps landing at or below ``10 * floor`` (the roundoff level of the
    residual, see ``SolveResult.noise_floor``) carry no convergence
    information and are skipped.
    """
    h = np.asarray(history, dtype=float)
    pairs = [(a, b) for a, b in zip(h[:-1], h[1:]) if a > 0 and b > 10.0 * floor]
    pairs = pairs[-last:]
    if not pairs:
        return 0.0
    return max(b / a**2 for a, b in pairs)
