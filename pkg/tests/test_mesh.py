import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinhomog.errors import ConfigError, GeometryError, StripOverflowError
from thinhomog.mesh import (MeshResolution, admissible_eps, build_cell_mesh, build_thin_mesh,
                            cell_mesh_from_resolution, edge_counts, mesh_quality)
from thinhomog.profiles import ProfileSpec

H1 = ProfileSpec.constant(1.0, role="h")


def _flat(eps=0.1, **kw):
    res = MeshResolution(**{"columns": 10, **kw})
    return build_thin_mesh(ProfileSpec.constant(1.0), H1, eps, 1.0, res)


def test_counts_flat():
    m = _flat()
    assert m.n_vertices == 77 and len(m.triangles) == 120
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(m.areas > 0)


def test_default_column_rule():
    g, h = ProfileSpec.cosine(1.0, 0.25, period=0.5), ProfileSpec.sine(2.0, 0.5, period=2.0, role="h")
    for eps, beta in [(0.2, 1.0), (0.1, 1.5), (0.05, 0.7)]:
        m = build_thin_mesh(g, h, eps, beta)
        need = 10 * max(1 / (eps * 0.5), 1 / (eps**beta * 2.0))
        assert m.N >= need - 1e-9


def test_refinement_multiplies_counts():
    m = _flat(refinement_level=1)
    assert m.N == 20 and m.bulk_rows == 8 and m.strip_rows == 4


def test_oscillating_strip_area():
    g = ProfileSpec.cosine(1.0, 0.5)
    m = build_thin_mesh(g, H1, 0.25, 1.0, MeshResolution(points_per_period=40))
    assert m.strip_area() == pytest.approx(0.25, abs=1e-3)


def test_strip_area_converges_second_order():
    g = ProfileSpec.constant(1.0)
    h = ProfileSpec.sine(0.6, 0.3, role="h")
    eps = 0.3
    x = (np.arange(200000) + 0.5) / 200000
    exact = eps * np.mean(h(x / eps))
    errs = [abs(build_thin_mesh(g, h, eps, 1.0, MeshResolution(columns=n)).strip_area() - exact)
            for n in (16, 32, 64, 128)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert min(ratios) >= 3.5, ratios


@given(st.floats(0.05, 0.3), st.floats(0.0, 0.45), st.floats(0.0, 0.4), st.sampled_from(["right", "left"]))
def test_thin_mesh_invariants(eps, ag, ah, diag):
    g = ProfileSpec.cosine(1.0, ag)
    h = ProfileSpec.sine(1.0, ah, role="h")
    if eps * h.bounds()[1] >= g.bounds()[0]:
        return
    m = build_thin_mesh(g, h, eps, 1.0, MeshResolution(points_per_period=5), diag)
    assert np.all(m.areas > 0)
    counts = np.array(list(edge_counts(m.triangles).values()))
    assert set(counts) <= {1, 2}
    x2 = m.vertices[m.fibers, 1]
    assert np.all(np.diff(x2, axis=1) > 0)
    assert np.all(x2[:, 0] == 0.0)
    assert np.array_equal(x2[:, -1], g(m.x1 / eps))
    assert np.allclose(x2[:, m.bulk_rows], g(m.x1 / eps) - eps * h(m.x1 / eps))
    # strip elements are exactly those with all vertices on or above the interface
    row = np.tile(np.arange(m.fibers.shape[1]), m.N + 1)
    above = np.all(row[m.triangles] >= m.bulk_rows, axis=1)
    assert np.array_equal(above, m.strip_mask)


def test_boundary_edges_once():
    m = _flat()
    ec = edge_counts(m.triangles)
    ones = [e for e, c in ec.items() if c == 1]
    # perimeter of a 10 x 6 quad grid
    assert len(ones) == 2 * (10 + 6)


def test_overflow_and_degenerate():
    with pytest.raises(StripOverflowError):
        build_thin_mesh(ProfileSpec.constant(1.0), ProfileSpec.constant(2.0, role="h"), 0.5)
    with pytest.raises(GeometryError):
        build_thin_mesh(ProfileSpec.constant(1.0), H1, -0.1)
    assert admissible_eps(ProfileSpec.cosine(1.0, 0.5), ProfileSpec.constant(2.0, role="h")) == 0.25


def test_resolution_validation():
    for kw in ({"points_per_period": 3}, {"bulk_rows": 1}, {"strip_rows": 1}, {"refinement_level": -1}):
        with pytest.raises(ConfigError):
            MeshResolution(**kw)
    with pytest.raises(ConfigError):
        build_cell_mesh(ProfileSpec.constant(1.0), 8, diagonal="up")


def test_cell_mesh():
    m = build_cell_mesh(ProfileSpec.constant(1.0), 8, 8)
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-12)
    assert len(m.periodic_pairs) == 9
    g = ProfileSpec.cosine(1.0, 0.5)
    # periodic trapezoid rule: exact for a single cosine mode, O(N^-2) in general
    for n in (16, 32, 64):
        assert abs(build_cell_mesh(g, n).areas.sum() - 1.0) <= 1.0 / n**2
    m = build_cell_mesh(g, 16, 5)
    left, right = m.vertices[m.periodic_pairs[:, 0]], m.vertices[m.periodic_pairs[:, 1]]
    assert np.allclose(right[:, 0] - left[:, 0], g.period)
    assert np.max(np.abs(right[:, 1] - left[:, 1])) <= 1e-12
    # top and bottom edges together with the periodic sides make up the boundary
    ec = edge_counts(m.triangles)
    boundary = {e for e, c in ec.items() if c == 1}
    tagged = {tuple(sorted(e)) for e in np.vstack([m.top_edges, m.bottom_edges]).tolist()}
    side = {tuple(sorted(e)) for f in (m.fibers[0], m.fibers[-1]) for e in zip(f[:-1], f[1:])}
    assert tagged.isdisjoint(side) and boundary == tagged | side
    assert not set(map(tuple, m.top_edges.tolist())) & set(map(tuple, m.bottom_edges.tolist()))
    r = cell_mesh_from_resolution(g, MeshResolution(points_per_period=12))
    assert r.columns == 12 and r.rows == 6


def test_quality():
    q = mesh_quality(build_cell_mesh(ProfileSpec.constant(1.0), 8, 8))
    assert q.min_angle == pytest.approx(45.0, abs=1e-9) and q.max_angle == pytest.approx(90.0, abs=1e-9)
    assert q.min_area > 0 and q.aspect_counts.sum() == 128
    m = build_thin_mesh(ProfileSpec.constant(1.0), H1, 0.05, 1.0, MeshResolution(strip_rows=2))
    top = m.vertices[m.fibers[:, -1], 1]
    below = m.vertices[m.fibers[:, -2], 1]
    iface = m.vertices[m.fibers[:, m.bulk_rows], 1]
    assert np.allclose(top - below, 0.025) and np.allclose(below - iface, 0.025)
