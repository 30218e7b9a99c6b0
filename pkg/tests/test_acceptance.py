"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test records a PASS/FAIL line (printed immediately and again in the
terminal summary) before asserting.
"""

import time

import numpy as np
import pytest

from conftest import VERDICTS
from oracles import channel_profile
from poroverify._geometry import element_geometry
from poroverify.fem import TransientSolver, evaluate, solve
from poroverify.mesh import refine_region
from poroverify.model import BRINKMAN, DARCY, benchmark, cells_for, mesh_for
from poroverify.verify import (
    convergence_study,
    decay_fit,
    dissipation,
    dissipation_cross,
    max_principle_check,
    perturbation_test,
    reciprocal_residual,
    total_mechanical_power,
    trend_flags,
    vorticity_field,
)

SLAB_LEVELS = [5, 10, 20, 40]


def verdict(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
    print(line)
    VERDICTS.append(line)
    assert ok, line


def _at(spec, inv_h, kind="Q9"):
    return mesh_for(spec, *cells_for(spec, inv_h), kind)


def _rel_gap(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def test_criterion_01_conservative_body_force():
    start = time.perf_counter()
    details, ok = [], True
    for model in (DARCY, BRINKMAN):
        table = convergence_study(benchmark("body_force", model), [4, 8, 16, 32], ("phi", "tmp"))
        phi, tmp = table.column("phi"), np.abs(table.column("tmp"))
        good = bool(np.all(np.diff(phi) < 0) and np.all(np.diff(tmp) < 0) and phi[-1] < phi[0] / 10)
        ok &= good
        details.append(f"{model} phi {phi[0]:.2e}->{phi[-1]:.2e} |tmp| {tmp[0]:.2e}->{tmp[-1]:.2e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    verdict(1, ok, "; ".join(details) + f"; {elapsed:.1f}s")


def test_criterion_02_minimum_dissipation():
    start = time.perf_counter()
    spec = benchmark("lid_cavity", BRINKMAN)
    sol = solve(_at(spec, 16), spec)
    base, vals = perturbation_test(sol, "phi", 50)
    bad = int(np.sum(vals < base))
    elapsed = time.perf_counter() - start
    verdict(2, bad == 0 and elapsed < 60,
            f"{bad}/50 violations, min increase {np.min(vals - base):.2e}, {elapsed:.1f}s")


def test_criterion_03_minimum_tmp():
    details, ok = [], True
    for model in (DARCY, BRINKMAN):
        spec = benchmark("pipe_bend_velocity", model)
        sol = solve(_at(spec, 16), spec)
        base, vals = perturbation_test(sol, "tmp", 50)
        bad = int(np.sum(vals < base))
        ok &= bad == 0
        details.append(f"{model} {bad}/50 violations (min increase {np.min(vals - base):.2e})")
    verdict(3, ok, "; ".join(details))


def _reciprocal_series(model):
    out = []
    for n in SLAB_LEVELS:
        s1 = benchmark("pressure_slab", model, p_inj=5.0)
        s2 = benchmark("pressure_slab", model, p_inj=7.5)
        mesh = _at(s1, n)
        out.append(reciprocal_residual(solve(mesh, s1), s1, solve(mesh, s2), s2).value)
    return np.abs(out)


def test_criterion_04_reciprocal_darcy():
    r = _reciprocal_series(DARCY)
    verdict("4 (Darcy)", bool(np.all(r < 1e-8)), "|eps| = " + ", ".join(f"{v:.1e}" for v in r))


def test_criterion_04_reciprocal_brinkman_decreasing():
    r = _reciprocal_series(BRINKMAN)
    ok = trend_flags(r)["monotone_decreasing"]
    verdict("4 (Brinkman)", ok, "|eps| = " + ", ".join(f"{v:.1e}" for v in r))


def test_criterion_05_reciprocal_oracle():
    s1 = benchmark("pressure_slab", BRINKMAN, p_inj=5.0)
    s2 = benchmark("pressure_slab", BRINKMAN, p_inj=7.5)
    mesh = mesh_for(s1, 2, 2)
    a, b = solve(mesh, s1), solve(mesh, s2)
    r = reciprocal_residual(a, s1, b, s2)
    direct = dissipation_cross(a, b)
    gaps = [_rel_gap(r.left, r.right), _rel_gap(r.left, direct), _rel_gap(r.right, direct)]
    verdict(5, max(gaps) < 1e-8, f"left {r.left:.10g} right {r.right:.10g} direct {direct:.10g}, max gap {max(gaps):.1e}")


def test_criterion_06_steady_max_principle():
    details, ok = [], True
    for name in ("body_force", "lid_cavity", "pressure_slab"):
        spec = benchmark(name, BRINKMAN)
        res = max_principle_check(vorticity_field(solve(_at(spec, 20), spec)), 1e-10)
        ok &= res["max_principle_ok"]
        details.append(f"{name} {'ok' if res['max_principle_ok'] else 'violated'}")
    verdict(6, ok, ", ".join(details))


def test_criterion_07_darcy_vorticity_vanishes():
    # On uniform meshes the separable forcing gives a curl-free discrete
    # velocity, so the norm sits at roundoff and a ratio carries no
    # information; wall-graded meshes break the separability and must show
    # the required decay.
    spec = benchmark("body_force", DARCY)
    # exact velocity is zero; measure against the forcing's velocity scale ||rho b / alpha|| = 10
    scale = 10.0
    uniform = [vorticity_field(solve(_at(spec, n), spec)).l2_norm() / scale for n in (8, 32)]
    graded = [
        vorticity_field(solve(refine_region(n, n, spec.domain, {"top", "left"}, 0.6, 2), spec)).l2_norm()
        for n in (8, 32)
    ]
    uniform_ok = uniform[1] < uniform[0] / 4 or max(uniform) < 1e-8
    graded_ok = graded[1] < graded[0] / 4
    verdict(7, uniform_ok and graded_ok,
            f"uniform |w|/scale {uniform[0]:.1e}->{uniform[1]:.1e}; graded |w| {graded[0]:.2e}->{graded[1]:.2e} "
            f"({graded[0] / graded[1]:.0f}x)")


SLAB_PROBES = np.array([[0.05, 0.95], [0.15, 0.2], [0.05, 0.6]])


def _slab_slopes(dt):
    spec = benchmark("pressure_slab", DARCY, dt=dt, t_end=1.0)
    solver = TransientSolver(_at(spec, 20), spec)
    state = solver.initial_state()
    series = [[0.0, *vorticity_field(state.solution).at(SLAB_PROBES)]]
    for _ in range(spec.transient.n_steps):
        state = solver.step(state)
        series.append([state.time, *vorticity_field(state.solution).at(SLAB_PROBES)])
    series = np.array(series)
    return np.array([decay_fit(series[:, [0, k + 1]], 1.0).slope for k in range(len(SLAB_PROBES))])


def test_criterion_08_transient_darcy_decay():
    coarse, fine = _slab_slopes(0.01), _slab_slopes(0.005)
    err_c, err_f = np.abs(coarse + 1), np.abs(fine + 1)
    ok = bool(np.all(err_c < 0.02) and np.all(err_f < err_c))
    verdict(8, ok, "slopes " + ", ".join(f"{s:.5f}" for s in coarse)
            + "; dt/2 " + ", ".join(f"{s:.5f}" for s in fine))


def test_criterion_09_transient_brinkman_max_principle():
    details, ok = [], True
    for name in ("lid_cavity", "body_force"):
        spec = benchmark(name, BRINKMAN, dt=0.5, t_end=1.0)
        solver = TransientSolver(_at(spec, 10), spec)
        state = solver.initial_state()
        while state.step < spec.transient.n_steps:
            state = solver.step(state)
        res = max_principle_check(vorticity_field(state.solution), 1e-10)
        ok &= res["max_principle_ok"] and state.time == pytest.approx(1.0)
        details.append(f"{name} t={state.time:g} {'ok' if res['max_principle_ok'] else 'violated'}")
    verdict(9, ok, ", ".join(details))


G_SLAB = (5.0 - 1.0) / 0.2


def test_criterion_10_channel_midline():
    spec = benchmark("pressure_slab", BRINKMAN)
    sol = solve(_at(spec, 32), spec)
    y = np.linspace(0, 1, 401)
    v, _ = evaluate(sol, np.column_stack([np.full_like(y, 0.1), y]))
    exact = channel_profile(y, G_SLAB, 1.0, 0.001, 1.0)
    err = np.abs(v[:, 0] - exact).max() / exact.max()
    verdict("10 (midline)", err < 0.01, f"max midline error {100 * err:.2f}% of peak")


def test_criterion_10_channel_l2_order():
    spec = benchmark("pressure_slab", BRINKMAN)
    errs = []
    for n in SLAB_LEVELS:
        mesh = _at(spec, n)
        g = element_geometry(mesh)
        xq = g.xq.reshape(-1, 2)
        v, _ = evaluate(solve(mesh, spec), xq)
        sq = (v[:, 0] - channel_profile(xq[:, 1], G_SLAB, 1.0, 0.001, 1.0)) ** 2 + v[:, 1] ** 2
        errs.append(np.sqrt(np.sum(g.wdet * sq.reshape(g.wdet.shape))))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    verdict("10 (L2 order)", bool(np.all(rates >= 2)),
            "errors " + ", ".join(f"{e:.2e}" for e in errs) + "; rates " + ", ".join(f"{r:.2f}" for r in rates))


def test_criterion_11_uniqueness():
    spec = benchmark("lid_cavity", BRINKMAN)
    mesh = _at(spec, 8)
    a = solve(mesh, spec, gauge="mean")
    b = solve(mesh, spec, gauge="pin")
    g = element_geometry(mesh)
    xq = g.xq.reshape(-1, 2)
    va, pa = evaluate(a, xq)
    vb, pb = evaluate(b, xq)
    dv = np.sqrt(np.sum(g.wdet * np.sum((va - vb) ** 2, axis=1).reshape(g.wdet.shape)))
    dp = float(np.std(pa - pb))
    verdict(11, dv < 1e-8 and dp < 1e-8, f"velocity L2 difference {dv:.1e}, pressure difference std {dp:.1e}")


def test_criterion_12_pollution_detection():
    spec = benchmark("lid_cavity", BRINKMAN)
    levels = [4, 8, 16, 32]
    uniform = convergence_study(spec, levels, ("phi",))
    zone = 1.0 / levels[0]
    graded = convergence_study(
        spec,
        [(lambda n=n: refine_region(n, n, spec.domain, {"top", "left", "right"}, 0.5, 4, zone=zone)) for n in levels],
        ("phi",),
    )
    fu, fg = uniform.flags["phi"], graded.flags["phi"]
    ok = fu["monotone_increasing"] and not fu["plateau"] and fg["plateau"]
    verdict(12, ok,
            "uniform " + ", ".join(f"{v:.5f}" for v in uniform.column("phi"))
            + f" {fu}; graded " + ", ".join(f"{v:.5f}" for v in graded.column("phi")) + f" plateau={fg['plateau']}")
