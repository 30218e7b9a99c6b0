"""Mechanics-based a posteriori checks on discrete solutions.

All functionals are evaluated by direct quadrature of the solution fields;
none of them reuse the assembled system matrix, so they act as an
independent check on the solver.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ._geometry import edge_geometry, element_geometry
from .fem import SolutionField, SolverError, _scatter, classify_edges, solve
from .mesh import Mesh
from .model import (
    BRINKMAN,
    DARCY,
    NORMAL_VELOCITY,
    PRESSURE,
    TRACTION,
    VELOCITY,
    ProblemSpec,
    Raster,
    SpecError,
    cells_for,
    mesh_for,
)

# trig body forces are not polynomial; integrate them with a richer rule
LOAD_DEGREE = 8


def _spec_for(solution: SolutionField, spec: Optional[ProblemSpec]) -> ProblemSpec:
    spec = solution.spec if spec is None else spec
    if spec.model != solution.model:
        raise SpecError(f"solution was computed with the {solution.model} model, spec is {spec.model}")
    return spec


def _at_quadrature(mesh: Mesh, velocity: np.ndarray, degree: int = 4):
    g = element_geometry(mesh, degree)
    ve = velocity[mesh.elements]
    v = np.einsum("qa,eai->eqi", g.N2, ve)
    L = np.einsum("eai,eqak->eqik", ve, g.G2)
    return g, v, L


def _sym(L):
    return 0.5 * (L + np.swapaxes(L, -1, -2))


def dissipation(solution: SolutionField, spec: Optional[ProblemSpec] = None) -> float:
    """``int alpha v.v`` plus ``int 2 mu D:D`` for Darcy-Brinkman."""
    spec = _spec_for(solution, spec)
    return _dissipation(solution.mesh, spec, solution.velocity)


def _dissipation(mesh, spec, velocity):
    g, v, L = _at_quadrature(mesh, velocity)
    alpha = spec.alpha(g.xq.reshape(-1, 2)).reshape(g.wdet.shape)
    phi = np.sum(g.wdet * alpha * np.einsum("eqi,eqi->eq", v, v))
    if spec.model == BRINKMAN:
        D = _sym(L)
        phi += np.sum(g.wdet * 2 * spec.mu * np.einsum("eqij,eqij->eq", D, D))
    return float(phi)


def body_force_work(mesh, spec, velocity, t=0.0, force_spec=None) -> float:
    """``int rho b . v`` with ``b`` taken from ``force_spec`` (default ``spec``)."""
    fs = spec if force_spec is None else force_spec
    g = element_geometry(mesh, LOAD_DEGREE)
    v = np.einsum("qa,eai->eqi", g.N2, velocity[mesh.elements])
    b = fs.body_force(g.xq.reshape(-1, 2), t).reshape(g.xq.shape)
    return float(fs.rho * np.sum(g.wdet * np.einsum("eqi,eqi->eq", b, v)))


def boundary_work(mesh, spec, velocity, t=0.0) -> float:
    """Traction work ``int t.v`` (Brinkman) or ``-int p0 v.n`` (Darcy) over natural edges."""
    owner = classify_edges(mesh, spec)
    eg = edge_geometry(mesh)
    total = 0.0
    for k, bc in enumerate(spec.bcs):
        if bc.kind not in (TRACTION, PRESSURE):
            continue
        rows = np.flatnonzero(owner == k)
        if not len(rows):
            continue
        v = np.einsum("qa,mai->mqi", eg.N, velocity[eg.nodes[rows]])
        val = bc.evaluate(eg.xq[rows].reshape(-1, 2), t)
        if bc.kind == TRACTION:
            integrand = np.einsum("mqi,mqi->mq", val.reshape(v.shape), v)
        else:
            integrand = -val.reshape(v.shape[:2]) * np.einsum("mqi,mi->mq", v, eg.normals[rows])
        total += float(np.sum(eg.wds[rows] * integrand))
    return total


def total_mechanical_power(solution: SolutionField, spec: Optional[ProblemSpec] = None) -> float:
    """Half the dissipation minus the work of body forces and boundary loads.

    For Darcy the boundary work is ``-int p0 v.n``, so the pressure term
    enters with a plus sign.
    """
    spec = _spec_for(solution, spec)
    return _tmp(solution.mesh, spec, solution.velocity, solution.time)


def _tmp(mesh, spec, velocity, t=0.0):
    return (
        0.5 * _dissipation(mesh, spec, velocity)
        - body_force_work(mesh, spec, velocity, t)
        - boundary_work(mesh, spec, velocity, t)
    )


# ---------------------------------------------------------------------------
# reciprocal relation


@dataclass(frozen=True)
class Reciprocal:
    """Normalized reciprocal residual ``(left - right) / left``.

    When ``left`` is too small to divide by, ``guarded`` is set and ``value``
    holds the plain difference instead.
    """

    value: float
    left: float
    right: float
    guarded: bool = False

    def __float__(self):
        return self.value


def _check_homogeneous_dirichlet(mesh, spec, tol=1e-14):
    owner = classify_edges(mesh, spec)
    eg = edge_geometry(mesh)
    for k, bc in enumerate(spec.bcs):
        if bc.kind not in (VELOCITY, NORMAL_VELOCITY):
            continue
        nodes = np.unique(eg.nodes[owner == k].ravel())
        if len(nodes) and np.abs(bc.evaluate(mesh.nodes[nodes])).max() > tol:
            raise SpecError(
                f"reciprocal relation needs zero prescribed velocity; the {bc.side} side carries nonzero data"
            )


def cross_work(sol_a: SolutionField, spec_a: ProblemSpec, sol_b: SolutionField) -> float:
    """Work of load case ``a`` on the velocity of ``b``."""
    mesh = sol_b.mesh
    return body_force_work(mesh, spec_a, sol_b.velocity) + boundary_work(mesh, spec_a, sol_b.velocity)


def reciprocal_residual(
    sol1: SolutionField, spec1: ProblemSpec, sol2: SolutionField, spec2: ProblemSpec
) -> Reciprocal:
    if sol1.mesh is not sol2.mesh and (
        sol1.mesh.nodes.shape != sol2.mesh.nodes.shape or not np.array_equal(sol1.mesh.elements, sol2.mesh.elements)
        or not np.allclose(sol1.mesh.nodes, sol2.mesh.nodes, rtol=0, atol=1e-14)
    ):
        raise SpecError("reciprocal relation needs both solutions on the same mesh")
    spec1, spec2 = _spec_for(sol1, spec1), _spec_for(sol2, spec2)
    if spec1.model != spec2.model:
        raise SpecError("reciprocal relation needs both solutions from the same model")
    _check_homogeneous_dirichlet(sol1.mesh, spec1)
    _check_homogeneous_dirichlet(sol2.mesh, spec2)
    left = cross_work(sol1, spec1, sol2)
    right = cross_work(sol2, spec2, sol1)
    if abs(left) < 1e-12 * (abs(left) + abs(right) + 1.0):
        return Reciprocal(left - right, left, right, True)
    return Reciprocal((left - right) / left, left, right, False)


def dissipation_cross(sol1: SolutionField, sol2: SolutionField, spec: Optional[ProblemSpec] = None) -> float:
    """``int alpha v1.v2 + int 2 mu D1:D2`` (the second term for Brinkman only)."""
    spec = _spec_for(sol1, spec)
    g, v1, L1 = _at_quadrature(sol1.mesh, sol1.velocity)
    _, v2, L2 = _at_quadrature(sol2.mesh, sol2.velocity)
    alpha = spec.alpha(g.xq.reshape(-1, 2)).reshape(g.wdet.shape)
    out = np.sum(g.wdet * alpha * np.einsum("eqi,eqi->eq", v1, v2))
    if spec.model == BRINKMAN:
        out += np.sum(g.wdet * 2 * spec.mu * np.einsum("eqij,eqij->eq", _sym(L1), _sym(L2)))
    return float(out)


# ---------------------------------------------------------------------------
# vorticity


@dataclass(frozen=True, eq=False)
class VorticityField:
    mesh: Mesh
    values: np.ndarray

    def at(self, x) -> np.ndarray:
        """Interpolated values at points ``(n, 2)``."""
        from ._geometry import locate
        from .mesh import ShapeBasis

        elem, ref = locate(self.mesh, x)
        N, _ = ShapeBasis(self.mesh.kind, 2).eval(ref)
        return np.einsum("na,na->n", N, self.values[self.mesh.elements[elem]])

    def l2_norm(self) -> float:
        g = element_geometry(self.mesh)
        w = np.einsum("qa,ea->eq", g.N2, self.values[self.mesh.elements])
        return float(math.sqrt(np.sum(g.wdet * w * w)))


def scalar_mass(mesh: Mesh) -> sp.csr_matrix:
    g = element_geometry(mesh)
    m = np.einsum("eq,qa,qb->eab", g.wdet, g.N2, g.N2)
    return _scatter(mesh.elements, mesh.elements, m, (mesh.n_nodes, mesh.n_nodes))


def scalar_stiffness(mesh: Mesh) -> sp.csr_matrix:
    g = element_geometry(mesh)
    k = np.einsum("eq,eqak,eqbk->eab", g.wdet, g.G2, g.G2)
    return _scatter(mesh.elements, mesh.elements, k, (mesh.n_nodes, mesh.n_nodes))


def curl_of(mesh: Mesh, velocity: np.ndarray) -> VorticityField:
    """L2 projection of ``dv_y/dx - dv_x/dy`` onto the quadratic scalar space."""
    g, _, L = _at_quadrature(mesh, velocity)
    w = L[..., 1, 0] - L[..., 0, 1]
    rhs = np.zeros(mesh.n_nodes)
    np.add.at(rhs, mesh.elements, np.einsum("eq,qa,eq->ea", g.wdet, g.N2, w))
    values = splu(scalar_mass(mesh).tocsc()).solve(rhs)
    return VorticityField(mesh, values)


def vorticity_field(solution: SolutionField) -> VorticityField:
    return curl_of(solution.mesh, solution.velocity)


def max_principle_check(w: VorticityField, tol: float = 1e-10) -> dict:
    """Compare interior extrema with the boundary extrema.

    Passes when ``interior_max <= max(0, boundary_max) + slack`` and
    ``interior_min >= min(0, boundary_min) - slack`` where ``slack`` is
    ``tol`` times the range of the nodal values.
    """
    vals = np.asarray(w.values)
    on_b = np.zeros(len(vals), dtype=bool)
    on_b[w.mesh.boundary_nodes] = True
    bmax, bmin = float(vals[on_b].max()), float(vals[on_b].min())
    if (~on_b).any():
        imax, imin = float(vals[~on_b].max()), float(vals[~on_b].min())
    else:
        imax, imin = bmax, bmin
    slack = tol * float(vals.max() - vals.min())
    ok = imax <= max(0.0, bmax) + slack and imin >= min(0.0, bmin) - slack
    return {
        "interior_max": imax,
        "interior_min": imin,
        "boundary_max": bmax,
        "boundary_min": bmin,
        "max_principle_ok": bool(ok),
        "tolerance": float(tol),
    }


def eigen_residual(w: VorticityField, k) -> float:
    """Discrete ``|| Lap(w) - w / k ||`` over elements away from the boundary.

    ``k`` is a scalar or a homogeneous permeability field; raster fields are
    refused since the eigenrelation assumes constant permeability.
    """
    if isinstance(k, Raster):
        raise SpecError("eigenrelation needs homogeneous permeability; raster field given")
    if hasattr(k, "k"):
        k = k.k
    k = float(k)
    if not k > 0:
        raise SpecError(f"permeability must be positive, got {k}")
    mesh = w.mesh
    M, K = scalar_mass(mesh), scalar_stiffness(mesh)
    interior = np.setdiff1d(np.arange(mesh.n_nodes), mesh.boundary_nodes)
    rhs = -(K @ w.values) - (M @ w.values) / k
    r = np.zeros(mesh.n_nodes)
    if len(interior):
        r[interior] = splu(M[interior][:, interior].tocsc()).solve(rhs[interior])
    touching = np.isin(mesh.elements, mesh.boundary_nodes).any(axis=1)
    g = element_geometry(mesh)
    rq = np.einsum("qa,ea->eq", g.N2, r[mesh.elements])
    return float(math.sqrt(np.sum((g.wdet * rq * rq)[~touching])))


# ---------------------------------------------------------------------------
# decay


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    n_points: int
    window: tuple


def decay_fit(series: Sequence, t_end: Optional[float] = None, window: float = 0.2, floor: float = 1e-14) -> DecayFit:
    """Least-squares fit of ``ln|w(t)/w(t0)|`` against ``t`` on ``[window*t_end, t_end]``."""
    data = np.asarray(series, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("series must be a sequence of (t, value) pairs")
    t_end = float(data[:, 0].max()) if t_end is None else float(t_end)
    t0 = window * t_end
    sel = data[(data[:, 0] >= t0 - 1e-12 * max(t_end, 1.0)) & (data[:, 0] <= t_end + 1e-12 * max(t_end, 1.0))]
    if len(sel) and np.all(np.abs(sel[:, 1]) < floor):
        raise ValueError(f"all samples are below {floor:g}; no decay is measurable")
    sel = sel[np.abs(sel[:, 1]) >= floor]
    if len(sel) < 5:
        raise ValueError(f"need at least 5 samples above {floor:g} in the fit window, got {len(sel)}")
    signs = np.sign(sel[:, 1])
    if np.any(signs != signs[0]):
        i = int(np.flatnonzero(signs != signs[0])[0])
        raise ValueError(f"vorticity changes sign within the fit window (near t={sel[i, 0]:g})")
    y = np.log(np.abs(sel[:, 1] / sel[0, 1]))
    slope, intercept = np.polyfit(sel[:, 0], y, 1)
    return DecayFit(float(slope), float(intercept), int(len(sel)), (t0, t_end))


def decay_slope(series: Sequence, t_end: Optional[float] = None, window: float = 0.2) -> float:
    return decay_fit(series, t_end, window).slope


# ---------------------------------------------------------------------------
# admissible competitors


def _bubble(m, s):
    return np.sin(np.pi * s) * np.sin(m * np.pi * s)


def _bubble_d(m, s):
    return np.pi * (np.cos(np.pi * s) * np.sin(m * np.pi * s) + m * np.sin(np.pi * s) * np.cos(m * np.pi * s))


def stream_curl(mesh: Mesh, coeffs: np.ndarray) -> np.ndarray:
    """Nodal values of ``curl psi`` for ``psi = sum c_mn B_m(x) B_n(y)`` on the mesh rectangle.

    ``B_m(s) = sin(pi s) sin(m pi s)`` in the normalized coordinate, so psi and
    its gradient vanish on the whole boundary.
    """
    r = mesh.rect
    xs = (mesh.nodes[:, 0] - r.x0) / r.width
    ys = (mesh.nodes[:, 1] - r.y0) / r.height
    vx = np.zeros(mesh.n_nodes)
    vy = np.zeros(mesh.n_nodes)
    for (m, n), c in np.ndenumerate(coeffs):
        if c == 0:
            continue
        vx += c * _bubble(m + 1, xs) * _bubble_d(n + 1, ys) / r.height
        vy -= c * _bubble_d(m + 1, xs) * _bubble(n + 1, ys) / r.width
    v = np.column_stack([vx, vy])
    v[mesh.boundary_nodes] = 0.0
    return v


def _constraint_matrix(mesh: Mesh, interior_dofs):
    """Rows: divergence against every pressure basis function and against
    every element indicator; two rows dropped for the constants."""
    g = element_geometry(mesh)
    N = mesh.n_nodes
    el = mesh.elements
    vel = np.concatenate([el, el + N], axis=1)
    div_q = np.einsum("eq,qc,eqbj->ecjb", g.wdet, g.N1, g.G2).reshape(len(el), g.N1.shape[1], -1)
    Bq = _scatter(mesh.pressure_elements, vel, div_q, (mesh.n_vertices, 2 * N))
    div_e = np.einsum("eq,eqbj->ejb", g.wdet, g.G2).reshape(len(el), 1, -1)
    Be = _scatter(np.arange(len(el))[:, None], vel, div_e, (len(el), 2 * N))
    C = sp.vstack([Bq[1:], Be[1:]]).tocsr()
    return C[:, interior_dofs]


def project_admissible(mesh: Mesh, velocity: np.ndarray) -> np.ndarray:
    """Mass-orthogonal projection onto discrete fields that vanish on the
    boundary and are divergence-free against pressures and element constants."""
    N = mesh.n_nodes
    interior_nodes = np.setdiff1d(np.arange(N), mesh.boundary_nodes)
    dofs = np.concatenate([interior_nodes, interior_nodes + N])
    M = scalar_mass(mesh)
    Mv = sp.block_diag([M, M]).tocsr()[dofs][:, dofs]
    C = _constraint_matrix(mesh, dofs)
    u0 = np.asarray(velocity).T.ravel()[dofs]
    kkt = sp.bmat([[Mv, C.T], [C, None]], format="csc")
    rhs = np.concatenate([Mv @ u0, np.zeros(C.shape[0])])
    try:
        sol = splu(kkt).solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"admissible projection failed: {exc}") from None
    u = np.zeros(2 * N)
    u[dofs] = sol[: len(dofs)]
    return np.column_stack([u[:N], u[N:]])


def admissible_perturbation(mesh: Mesh, amplitude: float, seed: int, modes: int = 4) -> np.ndarray:
    """Random divergence-free velocity perturbation vanishing on the boundary.

    Built as the curl of a seeded stream function and then projected onto
    the discrete admissible set, so ``v_h + delta`` stays a valid competitor
    for the minimum principles.  Returns nodal values ``(n_nodes, 2)``.
    """
    if amplitude < 0:
        raise ValueError(f"amplitude must be non-negative, got {amplitude}")
    if amplitude == 0:
        return np.zeros((mesh.n_nodes, 2))
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((modes, modes))
    delta = project_admissible(mesh, stream_curl(mesh, coeffs))
    peak = np.abs(delta).max()
    if peak > 0:
        delta *= amplitude / peak
    delta[mesh.boundary_nodes] = 0.0
    return delta


def perturbation_test(solution: SolutionField, functional: str, n_seeds: int = 50, amplitude: float = 0.1, seed0: int = 0):
    """Evaluate ``phi`` or ``tmp`` at ``v_h + delta`` for ``n_seeds`` perturbations.

    Returns ``(base value, array of perturbed values)``.
    """
    f = {"phi": lambda v: _dissipation(solution.mesh, solution.spec, v),
         "tmp": lambda v: _tmp(solution.mesh, solution.spec, v, solution.time)}[functional]
    base = f(solution.velocity)
    vals = np.array(
        [f(solution.velocity + admissible_perturbation(solution.mesh, amplitude, seed0 + s)) for s in range(n_seeds)]
    )
    return base, vals


# ---------------------------------------------------------------------------
# reports and convergence studies


@dataclass
class VerificationReport:
    phi: float
    tmp: float
    vorticity: dict
    reciprocal: Optional[float] = None
    reciprocal_guarded: bool = False
    decay: Optional[dict] = None
    hypotheses: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def hypotheses(spec: ProblemSpec) -> dict:
    """Which theorems' assumptions the problem satisfies."""
    dirichlet_zero = True
    for bc in spec.bcs:
        if bc.kind in (VELOCITY, NORMAL_VELOCITY):
            x = np.array([[spec.domain.x0, spec.domain.y0], [spec.domain.x1, spec.domain.y1]])
            # cheap probe; the reciprocal check itself is exact on mesh nodes
            dirichlet_zero &= bool(np.abs(bc.evaluate(np.linspace(x[0], x[1], 7))).max() == 0)
    return {
        "minimum_dissipation": spec.all_dirichlet and spec.body_force.conservative,
        "minimum_total_mechanical_power": True,
        "reciprocal": dirichlet_zero,
        "vorticity_maximum_principle": spec.model == BRINKMAN
        and spec.body_force.conservative
        and getattr(spec.permeability, "homogeneous", False),
        "vorticity_vanishes": spec.model == DARCY
        and spec.body_force.conservative
        and getattr(spec.permeability, "homogeneous", False),
    }


def verify_solution(
    solution: SolutionField,
    partner: Optional[SolutionField] = None,
    tol: float = 1e-10,
) -> VerificationReport:
    """Evaluate every applicable criterion for one solution."""
    spec = solution.spec
    w = vorticity_field(solution)
    frag = max_principle_check(w, tol)
    frag["l2_norm"] = w.l2_norm()
    rep = VerificationReport(
        phi=dissipation(solution),
        tmp=total_mechanical_power(solution),
        vorticity=frag,
        hypotheses=hypotheses(spec),
        meta={
            "benchmark": spec.name,
            "model": spec.model,
            "element": solution.mesh.kind,
            "h_max": solution.mesh.h_max,
            "n_elements": solution.mesh.n_elements,
            "time": solution.time,
        },
    )
    if partner is not None:
        r = reciprocal_residual(solution, spec, partner, partner.spec)
        rep.reciprocal, rep.reciprocal_guarded = r.value, r.guarded
    return rep


METRICS = ("phi", "tmp", "reciprocal")


@dataclass
class ConvergenceTable:
    rows: list
    flags: dict
    metrics: tuple

    def column(self, name) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)


def trend_flags(values: Sequence[float]) -> dict:
    """Strict monotonicity and a plateau flag (last two relative changes below 1%)."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2 or not np.all(np.isfinite(v)):
        return {"monotone_decreasing": False, "monotone_increasing": False, "plateau": False}
    d = np.diff(v)
    rel = np.abs(d) / np.maximum(np.abs(v[1:]), 1e-300)
    return {
        "monotone_decreasing": bool(np.all(d < 0)),
        "monotone_increasing": bool(np.all(d > 0)),
        "plateau": bool(len(rel) >= 2 and np.all(rel[-2:] < 0.01)),
    }


def _family_mesh(spec, item, kind):
    if isinstance(item, Mesh):
        return item, 1.0 / item.h_max
    if callable(item):
        mesh = item()
        return mesh, 1.0 / mesh.h_max
    nx, ny = cells_for(spec, float(item))
    return mesh_for(spec, nx, ny, kind), float(item)


def convergence_study(
    spec: ProblemSpec,
    mesh_family: Sequence,
    metrics: Iterable[str] = ("phi", "tmp"),
    partner: Optional[ProblemSpec] = None,
    kind: str = "Q9",
    solver: Callable = solve,
) -> ConvergenceTable:
    """Solve on each mesh and tabulate the requested functionals.

    ``mesh_family`` items are ``1/h`` values, :class:`Mesh` objects or
    zero-argument callables returning meshes.  Reciprocal residuals need a
    ``partner`` spec solved on the same meshes.  Flags are computed on the
    raw values for ``phi``/``tmp`` and on absolute values for ``reciprocal``.
    """
    metrics = tuple(metrics)
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}; choose from {METRICS}")
    if len(mesh_family) < 3:
        raise ValueError(f"a convergence study needs at least 3 meshes, got {len(mesh_family)}")
    if "reciprocal" in metrics and partner is None:
        raise ValueError("reciprocal metric needs a partner spec")
    rows = []
    for item in mesh_family:
        row = {}
        try:
            mesh, inv_h = _family_mesh(spec, item, kind)
            row.update(one_over_h=inv_h, h=mesh.h_max, n_elements=mesh.n_elements)
            sol = solver(mesh, spec)
            if "phi" in metrics:
                row["phi"] = dissipation(sol)
            if "tmp" in metrics:
                row["tmp"] = total_mechanical_power(sol)
            if "reciprocal" in metrics:
                sol2 = solver(mesh, partner)
                r = reciprocal_residual(sol, spec, sol2, partner)
                row["reciprocal"] = r.value
                row["reciprocal_guarded"] = r.guarded
            row["error"] = ""
        except (SolverError, SpecError, ValueError) as exc:
            row.setdefault("one_over_h", float("nan"))
            for m in metrics:
                row.setdefault(m, float("nan"))
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    rows.sort(key=lambda r: (r["h"] if "h" in r else np.inf), reverse=True)
    flags = {}
    for m in metrics:
        col = np.array([r[m] for r in rows], dtype=float)
        flags[m] = trend_flags(np.abs(col) if m == "reciprocal" else col)
    return ConvergenceTable(rows, flags, metrics)
