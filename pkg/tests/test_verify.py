import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from oracles import BE_SLOPE_DT001, channel_profile, channel_profile_dy, slab_exact_traction_spec
from poroverify._geometry import element_geometry
from poroverify.fem import SolutionField, SolverError, solve
from poroverify.mesh import Rect, build_quad_mesh, build_tri_mesh, refine_region
from poroverify.model import BRINKMAN, DARCY, Raster, SpecError, Uniform, benchmark, cells_for, mesh_for
from poroverify.verify import (
    VorticityField,
    admissible_perturbation,
    convergence_study,
    curl_of,
    decay_fit,
    decay_slope,
    dissipation,
    dissipation_cross,
    eigen_residual,
    hypotheses,
    max_principle_check,
    perturbation_test,
    reciprocal_residual,
    total_mechanical_power,
    trend_flags,
    verify_solution,
    vorticity_field,
)


def _field(mesh, spec, f):
    return SolutionField.interpolate(mesh, spec, f)


def test_dissipation_zero_and_constant():
    spec = benchmark("body_force", DARCY)
    m = build_quad_mesh(3, 3)
    assert dissipation(_field(m, spec, lambda x: np.zeros((len(x), 2)))) == 0.0
    one = _field(m, spec, lambda x: np.tile([1.0, 0.0], (len(x), 1)))
    assert dissipation(one) == pytest.approx(1.0, rel=1e-13)


def test_dissipation_channel_closed_form():
    spec, G = slab_exact_traction_spec()
    W, mu, alpha = 0.2, 0.001, 1.0
    integrand = lambda y: alpha * channel_profile(y, G, alpha, mu, 1.0) ** 2 + mu * channel_profile_dy(y, G, alpha, mu, 1.0) ** 2  # noqa: E731
    exact = W * quad(integrand, 0, 1, points=[0.05, 0.95], limit=200)[0]
    m = mesh_for(spec, *cells_for(spec, 64))
    prof = lambda x: np.column_stack([channel_profile(x[:, 1], G, alpha, mu, 1.0), 0 * x[:, 0]])  # noqa: E731
    assert dissipation(_field(m, spec, prof)) == pytest.approx(exact, rel=1e-4)
    assert dissipation(solve(m, spec)) == pytest.approx(exact, rel=1e-3)


def test_dissipation_model_mismatch():
    sol = _field(build_quad_mesh(2, 2), benchmark("body_force", DARCY), lambda x: x)
    with pytest.raises(SpecError, match="model"):
        dissipation(sol, benchmark("body_force", BRINKMAN))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000), a=st.floats(-10, 10), model=st.sampled_from([DARCY, BRINKMAN]))
def test_dissipation_quadratic_property(seed, a, model):
    spec = benchmark("body_force", model)
    m = build_tri_mesh(3, 3) if seed % 2 else build_quad_mesh(3, 3)
    v = np.random.default_rng(seed).standard_normal((m.n_nodes, 2))
    phi = dissipation(SolutionField(m, spec, v, np.zeros(m.n_vertices)))
    assert phi > 0
    scaled = dissipation(SolutionField(m, spec, a * v, np.zeros(m.n_vertices)))
    assert scaled == pytest.approx(a * a * phi, rel=1e-12, abs=1e-300)


def test_tmp_zero_field():
    for name, model in [("body_force", DARCY), ("pipe_bend_pressure", BRINKMAN), ("pressure_slab", DARCY)]:
        spec = benchmark(name, model)
        m = mesh_for(spec, *cells_for(spec, 4))
        assert total_mechanical_power(_field(m, spec, lambda x: np.zeros((len(x), 2)))) == 0.0


def test_tmp_darcy_pressure_sign():
    # v = (1, 0) through the slab: the pressure term is p_atm * L - p_inj * L
    spec = benchmark("pressure_slab", DARCY)
    m = mesh_for(spec, 2, 4)
    sol = _field(m, spec, lambda x: np.tile([1.0, 0.0], (len(x), 1)))
    # 0.5 * alpha * |Omega| + (p_atm - p_inj) * L
    assert total_mechanical_power(sol) == pytest.approx(0.5 * 0.2 + (1.0 - 5.0), rel=1e-12)


@pytest.mark.parametrize("name,model", [("pressure_slab", DARCY), ("pressure_slab", BRINKMAN), ("reservoir", DARCY)])
def test_tmp_discrete_identity(name, model):
    # homogeneous velocity data and a Galerkin solve: TMP is minus half the dissipation
    spec = benchmark(name, model)
    sol = solve(mesh_for(spec, *cells_for(spec, 8)), spec, stab=0.0)
    assert total_mechanical_power(sol) == pytest.approx(-0.5 * dissipation(sol), rel=1e-9)


def test_tmp_identity_stabilized_defect_small():
    spec = benchmark("reservoir", DARCY)
    sol = solve(mesh_for(spec, *cells_for(spec, 8)), spec)
    assert total_mechanical_power(sol) == pytest.approx(-0.5 * dissipation(sol), rel=1e-3)


def test_tmp_identity_needs_homogeneous_data():
    # the inlet profile adds work that the identity does not account for
    spec = benchmark("pipe_bend_pressure", BRINKMAN)
    sol = solve(mesh_for(spec, *cells_for(spec, 8)), spec, stab=0.0)
    assert abs(total_mechanical_power(sol) + 0.5 * dissipation(sol)) > 0.1


@pytest.mark.parametrize("model", [DARCY, BRINKMAN])
def test_pipe_bend_tmp_decreases(model):
    spec = benchmark("pipe_bend_velocity", model)
    table = convergence_study(spec, [4, 8, 16, 32], ("tmp",))
    assert table.flags["tmp"]["monotone_decreasing"]


def test_reciprocal_self_is_zero():
    spec = benchmark("pressure_slab", DARCY)
    sol = solve(mesh_for(spec, 2, 5), spec)
    r = reciprocal_residual(sol, spec, sol, spec)
    assert r.value == 0.0 and not r.guarded


def test_reciprocal_darcy_slab_pair():
    s1 = benchmark("pressure_slab", DARCY)
    s2 = benchmark("pressure_slab", DARCY, p_inj=7.5)
    for n in (5, 10, 20):
        m = mesh_for(s1, *cells_for(s1, n))
        r = reciprocal_residual(solve(m, s1), s1, solve(m, s2), s2)
        assert abs(r.value) < 1e-8


def test_reciprocal_oracle_small_mesh():
    s1 = benchmark("pressure_slab", BRINKMAN)
    s2 = benchmark("pressure_slab", BRINKMAN, p_inj=7.5)
    m = mesh_for(s1, 2, 2)
    a, b = solve(m, s1), solve(m, s2)
    r = reciprocal_residual(a, s1, b, s2)
    direct = dissipation_cross(a, b)
    assert r.left == pytest.approx(direct, rel=1e-10)
    assert r.right == pytest.approx(direct, rel=1e-10)


def test_reciprocal_guard():
    spec = benchmark("pressure_slab", DARCY, p_inj=1.0)
    m = mesh_for(spec, 2, 4)
    sol = solve(m, spec)
    r = reciprocal_residual(sol, spec, sol, spec)
    assert r.guarded


def test_reciprocal_rejects_nonzero_velocity_data():
    spec = benchmark("lid_cavity")
    sol = solve(mesh_for(spec, 3, 3), spec)
    with pytest.raises(SpecError, match="zero prescribed velocity"):
        reciprocal_residual(sol, spec, sol, spec)


def test_reciprocal_rejects_mesh_mismatch():
    spec = benchmark("pressure_slab", DARCY)
    a = solve(mesh_for(spec, 2, 4), spec)
    b = solve(mesh_for(spec, 2, 6), spec)
    with pytest.raises(SpecError, match="same mesh"):
        reciprocal_residual(a, spec, b, spec)


def test_vorticity_constant_and_rotation():
    spec = benchmark("lid_cavity")
    m = build_quad_mesh(4, 4)
    w = vorticity_field(_field(m, spec, lambda x: np.tile([0.3, -2.0], (len(x), 1))))
    assert np.abs(w.values).max() < 1e-12
    w = vorticity_field(_field(build_tri_mesh(4, 4), spec, lambda x: np.column_stack([-x[:, 1], x[:, 0]])))
    np.testing.assert_allclose(w.values, 2.0, atol=1e-10)


def test_vorticity_shear_oracle():
    spec = benchmark("lid_cavity")
    m = build_quad_mesh(32, 32)
    w = vorticity_field(_field(m, spec, lambda x: np.column_stack([np.sin(np.pi * x[:, 1]), 0 * x[:, 0]])))
    g = element_geometry(m)
    wq = np.einsum("qa,ea->eq", g.N2, w.values[m.elements])
    err = np.sqrt(np.sum(g.wdet * (wq + np.pi * np.cos(np.pi * g.xq[..., 1])) ** 2))
    assert err < 1e-3


def test_max_principle_zero_and_bump():
    m = build_quad_mesh(4, 4)
    assert max_principle_check(VorticityField(m, np.zeros(m.n_nodes)))["max_principle_ok"]
    bump = np.zeros(m.n_nodes)
    interior = np.setdiff1d(np.arange(m.n_nodes), m.boundary_nodes)
    bump[interior[len(interior) // 2]] = 1.0
    rep = max_principle_check(VorticityField(m, bump))
    assert not rep["max_principle_ok"]
    assert rep["interior_max"] == 1.0 and rep["boundary_max"] == 0.0


def test_max_principle_negative_boundary():
    # interior minimum below a negative boundary minimum violates the principle
    m = build_quad_mesh(3, 3)
    vals = np.full(m.n_nodes, -1.0)
    interior = np.setdiff1d(np.arange(m.n_nodes), m.boundary_nodes)
    vals[interior[0]] = -1.5
    assert not max_principle_check(VorticityField(m, vals))["max_principle_ok"]
    vals[interior[0]] = -0.5
    assert max_principle_check(VorticityField(m, vals))["max_principle_ok"]


def test_brinkman_body_force_max_principle():
    spec = benchmark("body_force", BRINKMAN)
    sol = solve(mesh_for(spec, 20, 20), spec)
    assert max_principle_check(vorticity_field(sol), 1e-10)["max_principle_ok"]


def test_eigen_residual_examples():
    errs = []
    for n in (4, 8, 16):
        m = build_quad_mesh(n, n)
        w = VorticityField(m, np.exp(m.nodes[:, 0]))
        errs.append(eigen_residual(w, 1.0))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-3
    m = build_quad_mesh(8, 8)
    # the residual of a constant is the norm of 1 away from the boundary layer, about 3/4
    assert eigen_residual(VorticityField(m, np.ones(m.n_nodes)), 1.0) == pytest.approx(0.75, rel=0.02)
    assert eigen_residual(VorticityField(m, np.zeros(m.n_nodes)), Uniform(2.0)) == 0.0


def test_eigen_residual_refuses_raster():
    m = build_quad_mesh(2, 2)
    with pytest.raises(SpecError, match="homogeneous"):
        eigen_residual(VorticityField(m, np.zeros(m.n_nodes)), Raster(np.ones((2, 2)), Rect.unit()))


def test_darcy_vorticity_vanishes():
    # smooth problem on wall-graded meshes whose zone shrinks with h
    spec = benchmark("body_force", DARCY)
    norms = []
    for n in (8, 16, 32):
        sol = solve(refine_region(n, n, spec.domain, {"top", "left"}, 0.6, 2), spec)
        norms.append(vorticity_field(sol).l2_norm())
    assert norms[1] < norms[0] / 4 and norms[2] < norms[1] / 4


def test_darcy_vorticity_separable_roundoff():
    spec = benchmark("body_force", DARCY)
    sol = solve(mesh_for(spec, 8, 8), spec)
    assert vorticity_field(sol).l2_norm() < 1e-9


def test_decay_exact_exponential():
    t = np.linspace(0, 1, 21)
    assert decay_slope(np.column_stack([t, 3 * np.exp(-t)])) == pytest.approx(-1.0, abs=1e-12)


def test_decay_backward_euler_oracle():
    t = 0.01 * np.arange(101)
    w = (1 / 1.01) ** np.arange(101)
    assert decay_slope(np.column_stack([t, w]), 1.0) == pytest.approx(BE_SLOPE_DT001, abs=1e-10)


def test_decay_errors():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValueError, match="below"):
        decay_fit(np.column_stack([t, np.full_like(t, 1e-16)]))
    with pytest.raises(ValueError, match="sign"):
        decay_fit(np.column_stack([t, np.cos(4 * t)]))
    with pytest.raises(ValueError, match="at least 5"):
        decay_fit(np.column_stack([t[:4], np.exp(-t[:4])]), window=0.0)


def test_decay_window_skips_transient():
    t = np.linspace(0, 1, 101)
    w = np.where(t < 0.1, 5.0, np.exp(-2 * t))
    fit = decay_fit(np.column_stack([t, w]), 1.0, window=0.2)
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.n_points == 81


def test_perturbation_zero_amplitude():
    m = build_quad_mesh(3, 3)
    assert np.all(admissible_perturbation(m, 0.0, 7) == 0)
    with pytest.raises(ValueError):
        admissible_perturbation(m, -1.0, 7)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), tri=st.booleans())
def test_perturbation_admissible_property(seed, tri):
    m = (build_tri_mesh if tri else build_quad_mesh)(6, 5, Rect(0, 0, 2, 1))
    d = admissible_perturbation(m, 0.1, seed)
    assert np.abs(d[m.boundary_nodes]).max() == 0.0
    assert np.abs(d).max() == pytest.approx(0.1)
    g = element_geometry(m)
    div = np.einsum("eqak,eak->eq", g.G2, d[m.elements])
    assert np.abs((div * g.wdet).sum(axis=1)).max() < 1e-10


def test_perturbation_deterministic():
    m = build_quad_mesh(5, 5)
    np.testing.assert_array_equal(admissible_perturbation(m, 0.2, 3), admissible_perturbation(m, 0.2, 3))


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), amplitude=st.floats(1e-3, 10.0))
def test_minimum_dissipation_property(seed, amplitude):
    base, vals = perturbation_test(_cavity_solution(), "phi", n_seeds=3, amplitude=amplitude, seed0=seed)
    assert np.all(vals >= base)


_CACHE = {}


def _cavity_solution():
    if "cavity" not in _CACHE:
        spec = benchmark("lid_cavity")
        _CACHE["cavity"] = solve(mesh_for(spec, 10, 10), spec)
    return _CACHE["cavity"]


@pytest.mark.parametrize(
    "name,model",
    [("pipe_bend_pressure", BRINKMAN), ("pipe_bend_pressure", DARCY), ("reservoir", DARCY), ("body_force", DARCY)],
)
def test_minimum_tmp_mixed_boundaries(name, model):
    spec = benchmark(name, model)
    sol = solve(mesh_for(spec, *cells_for(spec, 8)), spec)
    base, vals = perturbation_test(sol, "tmp", n_seeds=10)
    assert np.all(vals >= base)


def test_trend_flags():
    assert trend_flags([3, 2, 1]) == {"monotone_decreasing": True, "monotone_increasing": False, "plateau": False}
    assert trend_flags([1, 2, 2.01, 2.015])["plateau"]
    assert not trend_flags([1, 2, 2.01, 2.2])["plateau"]
    assert not any(trend_flags([1, np.nan, 2]).values())


def test_convergence_study_requires_three():
    with pytest.raises(ValueError, match="at least 3"):
        convergence_study(benchmark("lid_cavity"), [4, 8])


def test_convergence_study_rows_sorted_and_errors_annotated():
    spec = benchmark("lid_cavity")

    def flaky(mesh, spec):
        if mesh.nx == 6:
            raise SolverError("synthetic failure")
        return solve(mesh, spec)

    table = convergence_study(spec, [8, 4, 6], ("phi",), solver=flaky)
    assert [r["one_over_h"] for r in table.rows] == [4, 6, 8]
    assert table.rows[1]["error"].startswith("SolverError")
    assert np.isnan(table.rows[1]["phi"])
    assert table.rows[0]["error"] == ""


def test_convergence_study_graded_family():
    spec = benchmark("lid_cavity")
    family = [lambda n=n: refine_region(n, n, None, {"top", "left", "right"}, 0.5, 4, zone=0.25) for n in (4, 8, 16)]
    table = convergence_study(spec, family, ("phi",))
    assert len(table.rows) == 3
    assert np.all(np.isfinite(table.column("phi")))


def test_hypotheses_flags():
    h = hypotheses(benchmark("lid_cavity"))
    assert h["minimum_dissipation"] and h["vorticity_maximum_principle"] and not h["reciprocal"]
    h = hypotheses(benchmark("pipe_bend_pressure", BRINKMAN))
    assert not h["minimum_dissipation"]
    h = hypotheses(benchmark("body_force", DARCY))
    assert h["vorticity_vanishes"] and h["reciprocal"]


def test_verify_solution_report():
    s1 = benchmark("pressure_slab", DARCY)
    s2 = benchmark("pressure_slab", DARCY, p_inj=7.5)
    m = mesh_for(s1, 2, 5)
    rep = verify_solution(solve(m, s1), solve(m, s2))
    d = rep.to_dict()
    assert d["phi"] > 0 and abs(d["reciprocal"]) < 1e-8
    assert set(d["vorticity"]) >= {"interior_max", "boundary_min", "max_principle_ok", "tolerance"}


def test_curl_of_matches_vorticity_field():
    spec = benchmark("lid_cavity")
    sol = solve(mesh_for(spec, 4, 4), spec)
    np.testing.assert_array_equal(curl_of(sol.mesh, sol.velocity).values, vorticity_field(sol).values)
