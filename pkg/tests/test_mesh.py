import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poroverify.mesh import (
    Q9,
    T6,
    Rect,
    ShapeBasis,
    build_quad_mesh,
    build_tri_mesh,
    jacobian_determinants,
    quadrature_for,
    refine_region,
    shape_eval,
)


def test_quad_counts_small():
    m = build_quad_mesh(1, 1, Rect.unit())
    assert (m.n_nodes, m.n_elements, m.h_max) == (9, 1, 1.0)


def test_quad_counts_twenty():
    m = build_quad_mesh(20, 20, Rect.unit())
    assert m.n_nodes == 1681
    assert m.n_elements == 400
    assert m.h_max == pytest.approx(0.05)


def test_quad_counts_slab():
    m = build_quad_mesh(20, 4, Rect(0, 0, 0.2, 1))
    assert (m.n_nodes, m.n_elements) == (369, 80)


def test_tri_counts():
    m = build_tri_mesh(1, 1, Rect.unit())
    assert (m.n_elements, m.n_nodes) == (2, 9)
    assert build_tri_mesh(10, 10).n_elements == 200


def test_tri_diagonal_convention():
    # lower-left to upper-right split: both triangles share the (0,0)-(1,1) diagonal
    m = build_tri_mesh(1, 1)
    for el in m.elements:
        corners = {tuple(m.nodes[n]) for n in el[:3]}
        assert (0.0, 0.0) in corners and (1.0, 1.0) in corners


@pytest.mark.parametrize("bad", [(0, 1), (1, 0), (-2, 3)])
def test_rejects_bad_counts(bad):
    with pytest.raises(ValueError):
        build_quad_mesh(*bad)
    with pytest.raises(ValueError):
        build_tri_mesh(*bad)


def test_rejects_degenerate_rect():
    with pytest.raises(ValueError):
        Rect(0, 0, 0, 1)


def _area(mesh):
    rule = quadrature_for(mesh.kind, 4)
    return float(np.sum(jacobian_determinants(mesh, rule) * rule.weights))


@pytest.mark.parametrize("builder", [build_quad_mesh, build_tri_mesh])
def test_area_exact(builder):
    rect = Rect(-1, 0.5, 2, 1.75)
    assert _area(builder(7, 3, rect)) == pytest.approx(rect.area, abs=1e-12)


def test_boundary_edges_cover_boundary_once():
    for m in (build_quad_mesh(5, 3), build_tri_mesh(5, 3)):
        nodes = m.edge_nodes()
        starts, ends = m.nodes[nodes[:, 0]], m.nodes[nodes[:, 1]]
        lengths = np.linalg.norm(ends - starts, axis=1)
        assert lengths.sum() == pytest.approx(4.0, abs=1e-12)
        keys = {tuple(sorted((int(a), int(b)))) for a, b in nodes[:, :2]}
        assert len(keys) == len(nodes)


def test_refine_region_geometric_top_rows():
    m = refine_region(12, 12, Rect.unit(), {"top"}, 0.5, 4)
    h = np.diff(m.ylines)[-4:][::-1]
    np.testing.assert_allclose(h[1:] / h[:-1], 2.0, rtol=1e-12)
    assert h.sum() == pytest.approx(1 / 12, abs=1e-14)
    assert _area(m) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("grading", [1.0, 0.0, 1.5])
def test_refine_region_rejects_grading(grading):
    with pytest.raises(ValueError):
        refine_region(4, 4, None, {"top"}, grading, 2)


def test_refine_region_rejects_overlapping_zones():
    with pytest.raises(ValueError, match="too wide"):
        refine_region(2, 4, None, {"left", "right"}, 0.5, 2)


def test_refine_region_rejects_unknown_tag():
    with pytest.raises(ValueError, match="unknown boundary tags"):
        refine_region(4, 4, None, {"lid"}, 0.5, 2)


def test_fixed_zone_keeps_wall_cells():
    a = refine_region(8, 8, None, {"top"}, 0.5, 3, zone=0.25)
    b = refine_region(32, 32, None, {"top"}, 0.5, 3, zone=0.25)
    np.testing.assert_allclose(np.diff(a.ylines)[-3:], np.diff(b.ylines)[-3:], rtol=1e-12)


def test_quadrature_q9_degree4():
    rule = quadrature_for(Q9, 4)
    assert len(rule.weights) == 9
    assert rule.weights.sum() == pytest.approx(4.0)
    xi, eta = rule.points.T
    # int_{[-1,1]^2} xi^2 eta^2 = (2/3)^2
    assert np.sum(rule.weights * xi**2 * eta**2) == pytest.approx(4 / 9, abs=1e-14)


def test_quadrature_t6_degree4():
    assert quadrature_for(T6, 4).weights.sum() == pytest.approx(0.5)


@pytest.mark.parametrize("kind", [Q9, T6])
def test_quadrature_high_degree(kind):
    rule = quadrature_for(kind, 8)
    s, t = rule.points.T
    if kind == Q9:
        # int s^8 over [-1,1]^2 = 2 * 2/9
        assert np.sum(rule.weights * s**8) == pytest.approx(4 / 9, rel=1e-12)
    else:
        # int_T s^4 t^4 = 4! 4! / 10!
        assert np.sum(rule.weights * s**4 * t**4) == pytest.approx(576 / 3628800, rel=1e-12)


def test_quadrature_unsupported_degree():
    with pytest.raises(ValueError):
        quadrature_for(Q9, 200)
    with pytest.raises(ValueError):
        quadrature_for("Q4", 2)


@pytest.mark.parametrize("kind,order", [(Q9, 2), (Q9, 1), (T6, 2), (T6, 1)])
def test_kronecker(kind, order):
    basis = ShapeBasis(kind, order)
    vals, _ = basis.eval(basis.nodes)
    np.testing.assert_allclose(vals, np.eye(basis.size), atol=1e-14)


def test_center_partition():
    vals, _ = shape_eval(ShapeBasis(Q9, 2), [0.0, 0.0])
    assert vals.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("kind,order", [(Q9, 2), (Q9, 1), (T6, 2), (T6, 1)])
def test_gradients_match_finite_differences(kind, order):
    basis = ShapeBasis(kind, order)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.9, 0.9, (20, 2)) if kind == Q9 else rng.dirichlet([1, 1, 1], 20)[:, :2]
    _, grads = basis.eval(pts)
    step = 1e-6
    for d in range(2):
        e = np.zeros(2)
        e[d] = step
        fd = (basis.eval(pts + e)[0] - basis.eval(pts - e)[0]) / (2 * step)
        assert np.abs(fd - grads[:, :, d]).max() < 1e-8


def _reference_points(kind, n, seed):
    rng = np.random.default_rng(seed)
    if kind == Q9:
        return rng.uniform(-1, 1, (n, 2))
    return rng.dirichlet([1, 1, 1], n)[:, :2]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), kind=st.sampled_from([Q9, T6]), order=st.sampled_from([1, 2]))
def test_partition_of_unity_property(seed, kind, order):
    vals, grads = ShapeBasis(kind, order).eval(_reference_points(kind, 100, seed))
    np.testing.assert_allclose(vals.sum(axis=1), 1.0, atol=1e-13)
    np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(nx=st.integers(1, 64), ny=st.integers(1, 64))
def test_count_formulas_property(nx, ny):
    q = build_quad_mesh(nx, ny)
    assert q.n_nodes == (2 * nx + 1) * (2 * ny + 1)
    assert q.n_elements == nx * ny
    t = build_tri_mesh(nx, ny)
    assert t.n_nodes == q.n_nodes
    assert t.n_elements == 2 * nx * ny
    assert len(q.boundary_edges) == 2 * (nx + ny)


@settings(max_examples=15, deadline=None)
@given(
    nx=st.integers(3, 12),
    ny=st.integers(3, 12),
    grading=st.floats(0.2, 0.9),
    layers=st.integers(1, 4),
    kind=st.sampled_from([Q9, T6]),
    sides=st.sets(st.sampled_from(["bottom", "right", "top", "left"]), min_size=1),
)
def test_graded_jacobians_and_area_property(nx, ny, grading, layers, kind, sides):
    rect = Rect(0, 0, 2.0, 1.0)
    m = refine_region(nx, ny, rect, sides, grading, layers, kind)
    assert np.all(jacobian_determinants(m) > 0)
    assert _area(m) == pytest.approx(rect.area, abs=1e-12)
