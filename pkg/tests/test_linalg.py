import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from thinhomog.errors import (BreakdownError, FactorizationError, IndefiniteError,
                              NonConvergenceError)
from thinhomog.fem import assemble_1d
from thinhomog.linalg import (Tridiagonal, cg_solve, cgls_solve, cholesky_tridiagonal,
                              csr_from_triplets, is_symmetric, solve_symmetric, tql_implicit,
                              tridiag_gen_eigs)


def test_triplet_examples():
    A = csr_from_triplets(2, [0, 1], [0, 1], [1.0, 1.0])
    assert np.array_equal(A.toarray(), np.eye(2))
    B = csr_from_triplets(2, [0, 0], [1, 1], [2.0, 3.0])
    assert B[0, 1] == 5.0
    Z = csr_from_triplets(1, [0], [0], [0.0])
    assert np.array_equal(Z @ np.ones(1), [0.0])
    with pytest.raises(IndexError):
        csr_from_triplets(2, [0, 2], [0, 0], [1.0, 1.0])


@given(st.integers(0, 2**32 - 1))
def test_triplets_order_independent(seed):
    rng = np.random.default_rng(seed)
    k = 60
    r, c = rng.integers(0, 8, k), rng.integers(0, 8, k)
    v = rng.standard_normal(k)
    A = csr_from_triplets(8, r, c, v)
    p = rng.permutation(k)
    B = csr_from_triplets(8, r[p], c[p], v[p])
    assert np.array_equal(A.indptr, B.indptr) and np.array_equal(A.indices, B.indices)
    assert np.array_equal(A.data, B.data)  # bitwise
    for i in range(8):
        idx = A.indices[A.indptr[i]:A.indptr[i + 1]]
        assert np.all(np.diff(idx) > 0)


def test_cg_examples():
    b = np.array([3.0, -1.0, 2.0])
    r = cg_solve(sp.identity(3, format="csr"), b)
    assert np.allclose(r.x, b) and r.iterations <= 1
    r = cg_solve(sp.diags([1.0, 2.0, 4.0]).tocsr(), np.array([1.0, 2.0, 4.0]))
    assert np.allclose(r.x, 1.0)
    K, M = assemble_1d(50, 1.0)
    A, Ms = (K + M).to_sparse(), M.to_sparse()
    b = Ms @ np.ones(51)
    r = cg_solve(A, b, tol=1e-12)
    assert np.allclose(r.x, 1.0, atol=1e-10)
    assert np.linalg.norm(A @ r.x - b) <= 1e-12 * np.linalg.norm(b)


@given(st.integers(0, 2**32 - 1), st.integers(2, 200), st.floats(1.0, 4.0))
def test_cg_random_spd(seed, n, logcond):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.logspace(0, logcond, n)
    A = sp.csr_matrix((Q * lam) @ Q.T)
    A = (A + A.T) * 0.5
    b = rng.standard_normal(n)
    r = cg_solve(A, b, tol=1e-10)
    assert np.linalg.norm(b - A @ r.x) <= 1e-10 * np.linalg.norm(b)
    assert r.residual == pytest.approx(np.linalg.norm(b - A @ r.x), rel=1e-6, abs=1e-300)


def test_cg_errors():
    A = sp.diags([1.0, -1.0, 2.0]).tocsr()
    with pytest.raises(IndefiniteError):
        cg_solve(A, np.ones(3))
    with pytest.raises(NonConvergenceError) as ei:
        K, M = assemble_1d(400, 1.0)
        cg_solve((K + M).to_sparse(), np.random.default_rng(0).standard_normal(401), max_iter=3)
    assert ei.value.residual > 0
    with pytest.raises(BreakdownError):
        cg_solve(sp.diags([1.0, np.nan]).tocsr(), np.ones(2))


def test_indefinite_fallback_reports_method():
    rng = np.random.default_rng(3)
    n = 80
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.concatenate([[-0.5, -2.0], np.linspace(1, 50, n - 2)])
    A = sp.csr_matrix((Q * lam) @ Q.T)
    b = rng.standard_normal(n)
    r = solve_symmetric(A, b, tol=1e-9)
    assert r.method == "cgnr"
    assert np.linalg.norm(b - A @ r.x) <= 1e-9 * np.linalg.norm(b)
    spd = solve_symmetric(sp.identity(4, format="csr"), np.ones(4))
    assert spd.method == "cg"
    x = cgls_solve(A, b, tol=1e-9).x
    assert np.allclose(x, np.linalg.solve(A.toarray(), b), atol=1e-6)


def test_symmetry_flag():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 3.0]]))
    assert is_symmetric(A)
    assert not is_symmetric(sp.csr_matrix(np.array([[1.0, 2.0], [2.1, 3.0]])))


def _random_pencil(rng, n):
    d = rng.uniform(2.0, 4.0, n)
    e = rng.uniform(-0.9, 0.9, n - 1)
    M = Tridiagonal(d, e)
    K = Tridiagonal(rng.standard_normal(n) * 3, rng.standard_normal(n - 1))
    return K, M


def test_eigs_examples():
    K, M = assemble_1d(200, 1.0)
    lam = tridiag_gen_eigs(M, M)
    assert np.allclose(lam, 1.0, atol=1e-10)
    lam = tridiag_gen_eigs(K, M)
    assert abs(lam[0]) < 1e-8
    assert lam[1] == pytest.approx(np.pi**2, rel=1e-2)
    lam = tridiag_gen_eigs(K + M, M)
    assert lam[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(lam) >= 0)


def test_eigs_not_pd():
    K, M = assemble_1d(10, 1.0)
    with pytest.raises(FactorizationError):
        tridiag_gen_eigs(K, M.scaled(-1.0))
    with pytest.raises(FactorizationError):
        cholesky_tridiagonal(Tridiagonal([1.0, -1.0], [0.0]))


@given(st.integers(0, 2**32 - 1), st.integers(1, 100))
def test_eigs_against_lapack(seed, n):
    rng = np.random.default_rng(seed)
    K, M = _random_pencil(rng, n) if n > 1 else (Tridiagonal([1.5], []), Tridiagonal([2.0], []))
    lam, V = tridiag_gen_eigs(K, M, vectors=True)
    ref = scipy.linalg.eigh(K.to_dense(), M.to_dense(), eigvals_only=True)
    assert np.allclose(lam, ref, rtol=1e-10, atol=1e-10 * np.max(np.abs(ref)))
    Kd, Md = K.to_dense(), M.to_dense()
    scale = np.linalg.norm(Kd, 2) + np.abs(lam) * np.linalg.norm(Md, 2)
    res = np.linalg.norm(Kd @ V - (Md @ V) * lam, axis=0)
    assert np.all(res <= 1e-8 * scale)
    assert np.allclose(V.T @ Md @ V, np.eye(n), atol=1e-8)


def test_tql_plain():
    d = np.array([2.0, 2.0, 2.0, 2.0])
    e = np.array([-1.0, -1.0, -1.0])
    lam, _ = tql_implicit(d, e)
    k = np.arange(1, 5)
    assert np.allclose(np.sort(lam), 2 - 2 * np.cos(k * np.pi / 5))


def test_tridiagonal_ops():
    T = Tridiagonal([1.0, 2.0, 3.0], [0.5, -1.0])
    x = np.array([1.0, -2.0, 0.5])
    assert np.allclose(T @ x, T.to_dense() @ x)
    assert np.allclose((T + T).to_dense(), 2 * T.to_dense())
    assert np.allclose((T - T.scaled(0.5)).to_dense(), 0.5 * T.to_dense())
    with pytest.raises(ValueError):
        Tridiagonal([1.0, 2.0], [1.0, 2.0])


def test_determinism():
    rng = np.random.default_rng(7)
    K, M = _random_pencil(rng, 60)
    a = tridiag_gen_eigs(K, M)
    b = tridiag_gen_eigs(K, M)
    assert a.tobytes() == b.tobytes()
    A = (K + M.scaled(10.0)).to_sparse()
    bvec = rng.standard_normal(60)
    assert cg_solve(A, bvec).x.tobytes() == cg_solve(A, bvec).x.tobytes()
