import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinhomog.cell import (assemble_cell_rhs, compatibility_residual, homogenized_q0,
                            q0_for_profile, richardson_q0, solve_cell)
from thinhomog.errors import CompatibilityError
from thinhomog.fem import assemble_mass
from thinhomog.mesh import build_cell_mesh
from thinhomog.profiles import ProfileSpec

# Richardson extrapolation of q0 over N = 32, 64, 128 (square cells, right diagonal)
Q0_GOLDEN = 0.64076


def test_flat_cell():
    m = build_cell_mesh(ProfileSpec.constant(1.0), 16)
    assert np.all(assemble_cell_rhs(m) == 0)
    sol = solve_cell(m)
    assert np.all(sol.X == 0) and sol.q0 == pytest.approx(1.0, abs=1e-12)
    assert sol.corrector_energy <= 1e-12
    assert q0_for_profile(ProfileSpec.constant(2.5), 8) == pytest.approx(1.0, abs=1e-12)


def test_rhs_antisymmetry_and_support():
    g = ProfileSpec.cosine(1.0, 0.5)
    m = build_cell_mesh(g, 32, 8)
    b = assemble_cell_rhs(m)
    top = m.fibers[:, -1]
    assert np.allclose(b[top], -b[top[::-1]], atol=1e-14)
    off = np.setdiff1d(np.arange(m.n_vertices), top)
    assert np.all(b[off] == 0)


@given(st.lists(st.floats(0.4, 2.0), min_size=3, max_size=12), st.integers(4, 40))
def test_rhs_compatibility_any_profile(samples, cols):
    g = ProfileSpec.table(samples, period=0.8)
    b = assemble_cell_rhs(build_cell_mesh(g, cols, 3))
    assert abs(b.sum()) <= 1e-12 * max(np.abs(b).sum(), 1.0)
    assert compatibility_residual(b) <= 1e-12


def test_oscillating_cell():
    g = ProfileSpec.cosine(1.0, 0.5)
    sol = solve_cell(build_cell_mesh(g, 64))
    assert 1e-3 < sol.q0 < 1 - 1e-3
    assert sol.corrector_energy > 1e-3
    assert abs(sol.mean_X) <= 1e-10 * np.sqrt(sol.X @ assemble_mass(sol.mesh) @ sol.X)
    q_avg, q_en, disc = homogenized_q0(sol)
    assert disc <= 1e-8 and q_avg == pytest.approx(sol.q0, rel=1e-14)
    # periodic pairs carry one unknown
    p = sol.mesh.periodic_pairs
    assert np.array_equal(sol.X[p[:, 0]], sol.X[p[:, 1]])
    assert np.linalg.norm(sol.X) > 0


def test_q0_golden_two_families():
    g = ProfileSpec.cosine(1.0, 0.5)
    vals, a, order = richardson_q0(g)
    _, b, _ = richardson_q0(g, diagonal="left", rows_ratio=0.5)
    assert abs(a - Q0_GOLDEN) <= 1e-4
    assert abs(a - b) <= 1e-3
    assert abs(vals[-1] - a) <= 1e-3
    assert 1.5 < order < 2.5


def test_refinement_monotone():
    g = ProfileSpec.cosine(1.0, 0.3, period=0.5)
    q = [q0_for_profile(g, n) for n in (32, 64, 128)]
    d = np.abs(np.diff(q))
    assert d[1] < d[0]


def test_incompatible_rhs(monkeypatch):
    import thinhomog.cell as cell
    m = build_cell_mesh(ProfileSpec.cosine(1.0, 0.5), 8)
    monkeypatch.setattr(cell, "assemble_cell_rhs", lambda mesh: np.ones(mesh.n_vertices))
    with pytest.raises(CompatibilityError):
        cell.solve_cell(m)


@given(st.floats(0.05, 0.45), st.floats(0.3, 2.0))
def test_q0_in_unit_interval(a, L):
    q = q0_for_profile(ProfileSpec.cosine(1.0, a, period=L), 16)
    assert 0 < q <= 1 + 1e-8
