"""Sparse assembly, Jacobi-preconditioned CG and a tridiagonal pencil eigensolver.

Sparse matrices are ``scipy.sparse.csr_matrix`` objects; everything built here
goes through :func:`csr_from_triplets`, which sums duplicates in a canonical
order so assembled operators are bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .errors import BreakdownError, FactorizationError, IndefiniteError, NonConvergenceError


def csr_from_triplets(n: int, rows, cols, vals) -> sp.csr_matrix:
    """Assemble an ``n x n`` CSR matrix, summing duplicate entries.

    Triplets are sorted by (row, col, value) before summation, so the result
    does not depend on the order in which they were supplied.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise ValueError("triplet arrays must have equal length")
    if len(rows) and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise IndexError(f"triplet index out of range for n = {n}")
    order = np.lexsort((vals, cols, rows))
    r, c, v = rows[order], cols[order], vals[order]
    if len(r):
        key = r * n + c
        start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        r, c = r[start], c[start]
        v = np.add.reduceat(v, start)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, r + 1, 1)
    indptr = np.cumsum(indptr)
    return sp.csr_matrix((v, c, indptr), shape=(n, n))


def is_symmetric(A, rtol: float = 1e-14) -> bool:
    D = (A - A.T).tocoo()
    if D.nnz == 0:
        return True
    scale = abs(A).max()
    return bool(np.max(np.abs(D.data)) <= rtol * max(scale, 1e-300))


class CGResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float  # ||b - A x||_2 from an explicit matvec


def cg_solve(A, b, tol: float = 1e-10, max_iter: Optional[int] = None,
             x0: Optional[np.ndarray] = None) -> CGResult:
    """Solve ``A x = b`` for SPD ``A`` with Jacobi-preconditioned CG.

    Stops once the explicitly recomputed residual satisfies
    ``||b - A x|| <= tol * ||b||``. Raises :class:`IndefiniteError` on a
    non-positive curvature direction and :class:`NonConvergenceError` after
    ``max_iter`` iterations.
    """
    b = np.asarray(b, dtype=float)
    n = len(b)
    max_iter = 10 * n + 100 if max_iter is None else max_iter
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0 and x0 is None:
        return CGResult(x, 0, 0.0)
    target = tol * bnorm
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise IndefiniteError("Jacobi preconditioner needs a positive diagonal")
    dinv = 1.0 / diag

    r = b - A @ x
    it = 0
    while True:
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return CGResult(x, it, rnorm)
        z = dinv * r
        p = z.copy()
        rz = float(r @ z)
        while it < max_iter:
            Ap = A @ p
            pAp = float(p @ Ap)
            if not math.isfinite(pAp):
                raise BreakdownError("non-finite value in CG", residual=rnorm)
            if pAp <= 0.0:
                raise IndefiniteError("non-positive curvature in CG", residual=rnorm)
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            it += 1
            rnorm = float(np.linalg.norm(r))
            if rnorm <= target:
                break
            z = dinv * r
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        # replace the recursive residual by the true one; restart if they drifted apart
        r = b - A @ x
        true = float(np.linalg.norm(r))
        if true <= target:
            return CGResult(x, it, true)
        if it >= max_iter:
            raise NonConvergenceError(f"CG did not converge in {max_iter} iterations",
                                      residual=true)


class SymmetricSolve(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float
    method: str  # "cg" or "minres"


def cgls_solve(A, b, tol: float = 1e-10, max_iter: Optional[int] = None) -> CGResult:
    """CG on the normal equations ``A^T A x = A^T b`` (CGLS form, ``A^T A`` never built).

    Columns are scaled to unit norm. The recursively updated residual is the
    residual of the original system, so the stopping test is on ``||b - A x||``.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    max_iter = 50 * n + 200 if max_iter is None else max_iter
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return CGResult(np.zeros(n), 0, 0.0)
    c = np.sqrt(np.asarray(A.multiply(A).sum(axis=0)).ravel())
    c[c == 0] = 1.0
    As = (A @ sp.diags(1.0 / c)).tocsr()
    AsT = As.T.tocsr()
    y = np.zeros(n)
    r = b.copy()
    s = AsT @ r
    p = s.copy()
    gam = float(s @ s)
    for k in range(1, max_iter + 1):
        q = As @ p
        qq = float(q @ q)
        if not np.isfinite(qq) or qq == 0.0:
            raise BreakdownError("CGLS breakdown", residual=float(np.linalg.norm(r)))
        a = gam / qq
        y += a * p
        r -= a * q
        if float(np.linalg.norm(r)) <= tol * bnorm:
            x = y / c
            true = float(np.linalg.norm(b - A @ x))
            if true <= 2.0 * tol * bnorm:
                return CGResult(x, k, true)
            r = b - As @ y  # drifted: resync and keep going
        s = AsT @ r
        gn = float(s @ s)
        p = s + (gn / gam) * p
        gam = gn
    raise NonConvergenceError(f"CGLS did not converge in {max_iter} iterations",
                              residual=float(np.linalg.norm(r)))


def solve_symmetric(A, b, tol: float = 1e-10, max_iter: Optional[int] = None) -> SymmetricSolve:
    """CG, falling back to CG on the normal equations when ``A`` turns out to be indefinite.

    The method used is reported in the result (``"cg"`` or ``"cgnr"``).
    """
    try:
        res = cg_solve(A, b, tol, max_iter)
        return SymmetricSolve(res.x, res.iterations, res.residual, "cg")
    except IndefiniteError:
        pass
    res = cgls_solve(A, b, tol)
    return SymmetricSolve(res.x, res.iterations, res.residual, "cgnr")


# --- tridiagonal matrices ---------------------------------------------------

@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix given by its diagonal and first off-diagonal."""

    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", np.asarray(self.diag, dtype=float))
        object.__setattr__(self, "off", np.asarray(self.off, dtype=float))
        if len(self.off) != max(len(self.diag) - 1, 0):
            raise ValueError("off-diagonal must have length n - 1")

    @property
    def n(self) -> int:
        return len(self.diag)

    def __matmul__(self, x):
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def __add__(self, other: "Tridiagonal") -> "Tridiagonal":
        return Tridiagonal(self.diag + other.diag, self.off + other.off)

    def __sub__(self, other: "Tridiagonal") -> "Tridiagonal":
        return Tridiagonal(self.diag - other.diag, self.off - other.off)

    def scaled(self, c: float) -> "Tridiagonal":
        return Tridiagonal(c * self.diag, c * self.off)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def to_sparse(self) -> sp.csr_matrix:
        return sp.diags([self.off, self.diag, self.off], [-1, 0, 1], format="csr")

    def banded(self) -> np.ndarray:
        """(3, n) storage for ``scipy.linalg.solve_banded`` with ``(l, u) = (1, 1)``."""
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        ab[2, :-1] = self.off
        return ab


def cholesky_tridiagonal(M: Tridiagonal):
    """``M = L L^T`` with ``L`` lower bidiagonal; returns (diagonal, subdiagonal) of ``L``."""
    n = M.n
    d = np.empty(n)
    l = np.empty(max(n - 1, 0))
    piv = M.diag[0]
    for i in range(n):
        if i > 0:
            l[i - 1] = M.off[i - 1] / d[i - 1]
            piv = M.diag[i] - l[i - 1] ** 2
        if not piv > 0.0:
            raise FactorizationError(f"matrix not positive definite (pivot {i} = {piv:.3e})")
        d[i] = math.sqrt(piv)
    return d, l


def _bidiag_solve(d, l, B):
    """Solve ``L X = B`` for lower bidiagonal ``L``; B is (n, k)."""
    X = np.empty_like(B)
    X[0] = B[0] / d[0]
    for i in range(1, len(d)):
        X[i] = (B[i] - l[i - 1] * X[i - 1]) / d[i]
    return X


def householder_tridiagonalize(A: np.ndarray, want_q: bool = False):
    """Reduce symmetric ``A`` to tridiagonal ``Q^T A Q``; returns (d, e, Q or None)."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    Q = np.eye(n) if want_q else None
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = -math.copysign(np.linalg.norm(x), x[0]) if x[0] != 0 else -np.linalg.norm(x)
        v = x.copy()
        v[0] -= alpha
        vnorm2 = float(v @ v)
        if vnorm2 <= 1e-300:
            continue
        # apply H = I - 2 v v^T / (v^T v) on both sides of the trailing block
        p = A[k + 1:, k + 1:] @ v * (2.0 / vnorm2)
        K = float(v @ p) / vnorm2
        w = p - K * v
        A[k + 1:, k + 1:] -= np.outer(v, w) + np.outer(w, v)
        A[k + 1:, k] = 0.0
        A[k, k + 1:] = 0.0
        A[k + 1, k] = A[k, k + 1] = alpha
        if want_q:
            Q[:, k + 1:] -= np.outer(Q[:, k + 1:] @ v, v) * (2.0 / vnorm2)
    d = np.diag(A).copy()
    e = np.diag(A, -1).copy() if n > 1 else np.zeros(0)
    return d, e, Q


def tql_implicit(d, e, Z: Optional[np.ndarray] = None, max_sweeps: int = 50):
    """Eigenvalues of the symmetric tridiagonal (d, e) by implicit QL with shifts.

    If ``Z`` is given its columns are rotated along (pass the identity to get
    eigenvectors). Returns (eigenvalues ascending, Z with matching columns).
    """
    d = np.array(d, dtype=float)
    n = len(d)
    e = np.append(np.array(e, dtype=float), 0.0)[:n]
    if Z is not None:
        Z = np.array(Z, dtype=float)
    eps = np.finfo(float).eps
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if sweeps == max_sweeps:
                raise NonConvergenceError(f"implicit QL: no convergence for eigenvalue {l}")
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi1 = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * Z[:, i] + c * zi1
                    Z[:, i] = c * Z[:, i] - s * zi1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d, kind="stable")
    d = d[order]
    if Z is not None:
        Z = Z[:, order]
    return d, Z


def tridiag_gen_eigs(K: Tridiagonal, M: Tridiagonal, vectors: bool = False):
    """All eigenvalues (ascending) of the pencil ``K v = lam M v``.

    ``M = L L^T`` by bidiagonal Cholesky, ``C = L^-1 K L^-T`` is reduced back
    to tridiagonal form by Householder reflections and diagonalized by
    implicit QL. With ``vectors=True`` also returns M-orthonormal
    eigenvectors as columns.
    """
    if K.n != M.n:
        raise ValueError("pencil matrices must have the same size")
    d, l = cholesky_tridiagonal(M)
    Y = _bidiag_solve(d, l, K.to_dense())
    C = _bidiag_solve(d, l, Y.T.copy())
    C = 0.5 * (C + C.T)
    td, te, Q = householder_tridiagonalize(C, want_q=vectors)
    lam, Z = tql_implicit(td, te, np.eye(K.n) if vectors else None)
    if not vectors:
        return lam
    W = Q @ Z
    # v = L^-T w: back substitution with the upper bidiagonal L^T
    V = np.empty_like(W)
    V[-1] = W[-1] / d[-1]
    for i in range(K.n - 2, -1, -1):
        V[i] = (W[i] - l[i] * V[i + 1]) / d[i]
    return lam, V
