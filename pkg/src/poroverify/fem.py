"""Mixed finite elements for steady and transient Darcy / Darcy-Brinkman flow.

Q9 meshes carry Q2 velocity with continuous Q1 pressure, T6 meshes P2
velocity with continuous P1 pressure.  Unknowns are ordered
``[v_x (all nodes), v_y (all nodes), p (vertex nodes)]``.

Darcy flow adds a residual-based pressure stabilization to the continuity
row only: ``-sum_K tau_K (R, grad q)_K`` with ``tau_K = delta h_K^2 / alpha_K``
and ``R`` the strong momentum residual, so it vanishes for the exact
solution.  The momentum row stays plain Galerkin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ._geometry import edge_geometry, element_geometry, locate
from .mesh import Q9, SIDES, T6, Mesh, ShapeBasis
from .model import (
    BRINKMAN,
    DARCY,
    NORMAL_VELOCITY,
    PRESSURE,
    TRACTION,
    VELOCITY,
    ProblemSpec,
    SpecError,
    side_coordinate,
)

INTERPOLATIONS = {"Q2P1": Q9, "P2P1": T6}
GAUGES = ("mean", "pin", "none")
RESIDUAL_TOL = 1e-10
PIVOT_TOL = 1e-13


class SolverError(RuntimeError):
    """Linear solve failed or did not reach the residual tolerance."""


def _scatter(rows, cols, vals, shape):
    """COO assembly of element blocks ``vals[e, m, n]`` at ``rows[e, m]``, ``cols[e, n]``."""
    r = np.broadcast_to(rows[:, :, None], vals.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], vals.shape).ravel()
    return sp.coo_matrix((vals.ravel(), (r, c)), shape=shape).tocsr()


def classify_edges(mesh: Mesh, spec: ProblemSpec) -> np.ndarray:
    """Index into ``spec.bcs`` for every boundary edge, decided by the edge midpoint."""
    eg = edge_geometry(mesh)
    mids = mesh.nodes[eg.nodes[:, 2]]
    owner = np.full(len(eg.nodes), -1)
    for side_id, side in enumerate(SIDES):
        rows = np.flatnonzero(eg.sides == side_id)
        s = side_coordinate(side, mids[rows])
        for k, bc in enumerate(spec.bcs):
            if bc.side != side:
                continue
            hit = rows[bc.covers(s)]
            if np.any(owner[hit] >= 0):
                raise SpecError(f"boundary edge on the {side} side matches two conditions")
            owner[hit] = k
    if np.any(owner < 0):
        raise SpecError("some boundary edges are not covered by any boundary condition")
    return owner


class Assembler:
    """Element integrals for one mesh/spec pair.

    Matrices are built once and combined per request; loads are evaluated at
    a given time so the same object drives steady and transient solves.
    """

    def __init__(self, mesh: Mesh, spec: ProblemSpec, stab: float = 1.0, element_order=None, degree: int = 4):
        r, d = spec.domain, mesh.rect
        scale = max(r.width, r.height)
        if max(abs(r.x0 - d.x0), abs(r.x1 - d.x1), abs(r.y0 - d.y0), abs(r.y1 - d.y1)) > 1e-12 * scale:
            raise SpecError(f"mesh covers {d} but the problem domain is {r}")
        self.mesh = mesh
        self.spec = spec
        self.stab = float(stab)
        self.geo = element_geometry(mesh, degree)
        n_el = mesh.n_elements
        self.order = np.arange(n_el) if element_order is None else np.asarray(element_order)
        if sorted(self.order.tolist()) != list(range(n_el)):
            raise ValueError("element_order must be a permutation of the element ids")
        self.N = mesh.n_nodes
        self.n_v = 2 * self.N
        self.n_p = mesh.n_vertices
        self.n = self.n_v + self.n_p
        xq = self.geo.xq.reshape(-1, 2)
        alpha = spec.alpha(xq).reshape(self.geo.wdet.shape)
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
            raise SpecError("drag coefficient alpha must be positive and finite everywhere")
        self.alpha_q = alpha
        self.edge_owner = classify_edges(mesh, spec)

    # -- connectivity ------------------------------------------------------

    @cached_property
    def vel_dofs(self):
        el = self.mesh.elements[self.order]
        return np.concatenate([el, el + self.N], axis=1)

    @cached_property
    def p_dofs(self):
        return self.n_v + self.mesh.pressure_elements[self.order]

    def _g(self, name):
        return getattr(self.geo, name)[self.order]

    # -- element matrices --------------------------------------------------

    def _vector_mass(self, weight):
        N2, w = self.geo.N2, weight[self.order] * self._g("wdet")
        m = np.einsum("eq,qa,qb->eab", w, N2, N2)
        nb = N2.shape[1]
        blk = np.zeros((len(m), 2 * nb, 2 * nb))
        blk[:, :nb, :nb] = m
        blk[:, nb:, nb:] = m
        return _scatter(self.vel_dofs, self.vel_dofs, blk, (self.n_v, self.n_v))

    @cached_property
    def mass_alpha(self):
        return self._vector_mass(self.alpha_q)

    @cached_property
    def mass(self):
        """Unweighted vector mass matrix."""
        return self._vector_mass(np.ones_like(self.alpha_q))

    @cached_property
    def viscous(self):
        """``int 2 mu D(u):D(w)`` on the velocity block."""
        G, w = self._g("G2"), self.spec.mu * self._g("wdet")
        lap = np.einsum("eq,eqak,eqbk->eab", w, G, G)
        cross = np.einsum("eq,eqaj,eqbi->eijab", w, G, G)
        nb = G.shape[2]
        blk = np.empty((len(w), 2 * nb, 2 * nb))
        for i in range(2):
            for j in range(2):
                blk[:, i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = cross[:, i, j] + (lap if i == j else 0.0)
        return _scatter(self.vel_dofs, self.vel_dofs, blk, (self.n_v, self.n_v))

    @cached_property
    def divergence(self):
        """``B[q, v] = -(div v, q)``; shape ``(n_p, n_v)``."""
        N1, G, w = self.geo.N1, self._g("G2"), self._g("wdet")
        b = -np.einsum("eq,qc,eqbj->ecjb", w, N1, G)
        blk = b.reshape(len(w), N1.shape[1], -1)
        return _scatter(self.p_dofs - self.n_v, self.vel_dofs, blk, (self.n_p, self.n_v))

    @cached_property
    def tau(self):
        """Per-element stabilization parameter (ordered like ``self.order``)."""
        h = self.mesh.element_sizes()[self.order]
        w = self._g("wdet")
        a_bar = (self.alpha_q[self.order] * w).sum(1) / w.sum(1)
        return self.stab * h * h / a_bar

    def _stab_velocity(self, weight):
        G1, N2, w = self._g("G1"), self.geo.N2, self._g("wdet") * weight * self.tau[:, None]
        b = -np.einsum("eq,qb,eqcj->ecjb", w, N2, G1)
        blk = b.reshape(len(w), G1.shape[2], -1)
        return _scatter(self.p_dofs - self.n_v, self.vel_dofs, blk, (self.n_p, self.n_v))

    @cached_property
    def stab_alpha(self):
        return self._stab_velocity(self.alpha_q[self.order])

    @cached_property
    def stab_mass(self):
        return self._stab_velocity(np.ones_like(self._g("wdet")))

    @cached_property
    def stab_pressure(self):
        G1, w = self._g("G1"), self._g("wdet") * self.tau[:, None]
        blk = -np.einsum("eq,eqck,eqdk->ecd", w, G1, G1)
        pd = self.p_dofs - self.n_v
        return _scatter(pd, pd, blk, (self.n_p, self.n_p))

    @property
    def stabilized(self) -> bool:
        return self.spec.model == DARCY and self.stab > 0

    def velocity_block(self, dt=None):
        A = self.mass_alpha
        if self.spec.model == BRINKMAN:
            A = A + self.viscous
        if dt is not None:
            A = A + (self.spec.rho / dt) * self.mass
        return A

    def blocks(self, dt=None):
        """``(A, B, C_pv, C_pp)`` with ``B`` the plain coupling and ``C`` the stabilization."""
        A, B = self.velocity_block(dt), self.divergence
        if not self.stabilized:
            return A, B, sp.csr_matrix((self.n_p, self.n_v)), sp.csr_matrix((self.n_p, self.n_p))
        Cpv = self.stab_alpha
        if dt is not None:
            Cpv = Cpv + (self.spec.rho / dt) * self.stab_mass
        return A, B, Cpv, self.stab_pressure

    def matrix(self, dt=None):
        A, B, Cpv, Cpp = self.blocks(dt)
        return sp.bmat([[A, B.T], [B + Cpv, Cpp]], format="csr")

    # -- loads -------------------------------------------------------------

    @cached_property
    def dirichlet_plan(self):
        """List of ``(bc index, nodes, components)``, later entries winning on shared nodes."""
        eg = edge_geometry(self.mesh)
        plan = []
        for k, bc in enumerate(self.spec.bcs):
            if bc.kind not in (VELOCITY, NORMAL_VELOCITY):
                continue
            nodes = np.unique(eg.nodes[self.edge_owner == k].ravel())
            if bc.kind == VELOCITY:
                comps = (0, 1)
            else:
                comps = (1,) if bc.side in ("bottom", "top") else (0,)
            plan.append((k, nodes, comps))
        return plan

    def dirichlet(self, t=0.0):
        """Fixed velocity dofs and their values at time ``t``."""
        vals = {}
        x = self.mesh.nodes
        normals = {"bottom": -1.0, "right": 1.0, "top": 1.0, "left": -1.0}
        for k, nodes, comps in self.dirichlet_plan:
            if not len(nodes):
                continue
            bc = self.spec.bcs[k]
            v = bc.evaluate(x[nodes], t)
            for c in comps:
                val = v[:, c] if bc.kind == VELOCITY else v * normals[bc.side]
                for n, vv in zip(nodes, val):
                    vals[c * self.N + int(n)] = float(vv)
        dofs = np.array(sorted(vals), dtype=np.int64)
        return dofs, np.array([vals[d] for d in dofs])

    @cached_property
    def fixed_dofs(self):
        return self.dirichlet(0.0)[0]

    def body_load(self, t=0.0):
        """``(rho b, w)`` and, for stabilized Darcy, ``-tau (rho b, grad q)``."""
        g, spec = self.geo, self.spec
        b = spec.rho * spec.body_force(g.xq.reshape(-1, 2), t).reshape(g.xq.shape)
        b = b[self.order]
        w = self._g("wdet")
        f = np.zeros(self.n)
        fv = np.einsum("eq,qa,eqi->eia", w, g.N2, b).reshape(len(w), -1)
        np.add.at(f, self.vel_dofs, fv)
        if self.stabilized:
            fp = -np.einsum("e,eq,eqck,eqk->ec", self.tau, w, self._g("G1"), b)
            np.add.at(f, self.p_dofs, fp)
        return f

    def boundary_load(self, t=0.0):
        """Traction (Brinkman) or pressure (Darcy) boundary integrals."""
        eg = edge_geometry(self.mesh)
        f = np.zeros(self.n)
        for k, bc in enumerate(self.spec.bcs):
            if bc.kind not in (TRACTION, PRESSURE):
                continue
            rows = np.flatnonzero(self.edge_owner == k)
            if not len(rows):
                continue
            xq = eg.xq[rows]
            val = bc.evaluate(xq.reshape(-1, 2), t)
            if bc.kind == TRACTION:
                tr = val.reshape(len(rows), -1, 2)
            else:
                # Darcy weak form: the pressure term moves to the right side as -p0 w.n
                tr = -val.reshape(len(rows), -1, 1) * eg.normals[rows][:, None, :]
            fe = np.einsum("mq,qa,mqi->mia", eg.wds[rows], eg.N, tr)
            nodes = eg.nodes[rows]
            for i in range(2):
                np.add.at(f, i * self.N + nodes, fe[:, i, :])
        return f

    def history_load(self, v_old, dt):
        """Terms from ``(rho/dt) v_old`` in both rows."""
        u = np.asarray(v_old).T.ravel()
        f = np.zeros(self.n)
        c = self.spec.rho / dt
        f[: self.n_v] = c * (self.mass @ u)
        if self.stabilized:
            # continuity residual carries -rho v_old / dt
            f[self.n_v :] = c * (self.stab_mass @ u)
        return f

    def load(self, t=0.0, v_old=None, dt=None):
        f = self.body_load(t) + self.boundary_load(t)
        if v_old is not None:
            f = f + self.history_load(v_old, dt)
        return f


# ---------------------------------------------------------------------------
# systems and solutions


@dataclass(eq=False)
class DiscreteSystem:
    """Saddle-point system before constraints.

    ``matrix`` is ``[[A, B^T], [B + C_pv, C_pp]]``; ``fixed_dofs`` and
    ``fixed_values`` hold the Dirichlet data; ``gauge`` names how the
    pressure constant is removed when no natural boundary exists.
    """

    mesh: Mesh
    spec: ProblemSpec
    matrix: sp.csr_matrix
    rhs: np.ndarray
    fixed_dofs: np.ndarray
    fixed_values: np.ndarray
    gauge: str
    assembler: Assembler
    A: sp.csr_matrix
    B: sp.csr_matrix
    C_pv: sp.csr_matrix
    C_pp: sp.csr_matrix
    t: float = 0.0
    dt: Optional[float] = None

    @property
    def n_velocity(self) -> int:
        return self.assembler.n_v

    @property
    def n_pressure(self) -> int:
        return self.assembler.n_p

    @property
    def needs_gauge(self) -> bool:
        return not self.spec.has_natural_boundary


def assemble(
    mesh: Mesh,
    spec: ProblemSpec,
    gauge: str = "mean",
    stab: float = 1.0,
    element_order=None,
    interpolation: Optional[str] = None,
) -> DiscreteSystem:
    """Assemble the steady system of ``spec`` on ``mesh``.

    Args:
        gauge: 'mean' (zero-mean pressure multiplier), 'pin' (first pressure
            dof set to zero) or 'none'; only used without natural boundaries.
        stab: Darcy stabilization factor delta; ignored for Brinkman.
        element_order: optional permutation of element ids for the traversal.
        interpolation: 'Q2P1' or 'P2P1' to assert the mesh element kind.
    """
    if interpolation is not None:
        want = INTERPOLATIONS.get(interpolation)
        if want is None:
            raise ValueError(f"unknown interpolation {interpolation!r}; expected one of {sorted(INTERPOLATIONS)}")
        if mesh.kind != want:
            raise ValueError(f"{interpolation} needs {want} elements, mesh has {mesh.kind}")
    if gauge not in GAUGES:
        raise ValueError(f"unknown gauge {gauge!r}; expected one of {GAUGES}")
    asm = Assembler(mesh, spec, stab=stab, element_order=element_order)
    return _system(asm, gauge, t=0.0, dt=None, v_old=None)


def _system(asm, gauge, t, dt, v_old):
    A, B, Cpv, Cpp = asm.blocks(dt)
    K = sp.bmat([[A, B.T], [B + Cpv, Cpp]], format="csr")
    dofs, vals = asm.dirichlet(t)
    return DiscreteSystem(
        asm.mesh, asm.spec, K, asm.load(t, v_old, dt), dofs, vals, gauge, asm, A, B, Cpv, Cpp, t, dt
    )


@dataclass(frozen=True, eq=False)
class SolutionField:
    """Nodal velocity ``(n_nodes, 2)`` and vertex pressure ``(n_vertices,)``."""

    mesh: Mesh
    spec: ProblemSpec
    velocity: np.ndarray
    pressure: np.ndarray
    time: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def model(self) -> str:
        return self.spec.model

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.velocity.T.ravel(), self.pressure])

    @classmethod
    def from_coefficients(cls, mesh, spec, u, time=0.0, info=None):
        N = mesh.n_nodes
        vel = np.column_stack([u[:N], u[N : 2 * N]])
        return cls(mesh, spec, vel, np.array(u[2 * N :]), time, info or {})

    @classmethod
    def interpolate(cls, mesh, spec, v_func=None, p_func=None, time=0.0):
        """Nodal interpolant of analytic fields (missing ones are zero)."""
        x = mesh.nodes
        vel = np.zeros((mesh.n_nodes, 2)) if v_func is None else np.asarray(v_func(x), dtype=float).reshape(-1, 2)
        xp = x[mesh.vertex_nodes]
        pr = np.zeros(len(xp)) if p_func is None else np.asarray(p_func(xp), dtype=float).reshape(-1)
        return cls(mesh, spec, vel, pr, time)

    def with_velocity(self, velocity) -> "SolutionField":
        return SolutionField(self.mesh, self.spec, np.asarray(velocity, dtype=float), self.pressure, self.time, {})

    def evaluate(self, x):
        return evaluate(self, x)


def _reduced(system: DiscreteSystem):
    """Reduced matrix/rhs after Dirichlet elimination and gauge handling."""
    n = system.matrix.shape[0]
    fixed = np.zeros(n, dtype=bool)
    fixed[system.fixed_dofs] = True
    u_fix = np.zeros(n)
    u_fix[system.fixed_dofs] = system.fixed_values
    gauge = system.gauge if system.needs_gauge else "none"
    if gauge == "pin":
        fixed[system.n_velocity] = True
    free = np.flatnonzero(~fixed)
    K = system.matrix
    Kff = K[free][:, free]
    rhs = system.rhs[free] - K[free] @ u_fix
    if gauge == "mean":
        asm = system.assembler
        m = np.zeros(n)
        np.add.at(m, asm.p_dofs, np.einsum("eq,qc->ec", asm._g("wdet"), asm.geo.N1))
        col = sp.csr_matrix(m[free][:, None])
        Kff = sp.bmat([[Kff, col], [col.T, None]], format="csc")
        rhs = np.append(rhs, 0.0)
    return Kff.tocsc(), rhs, free, u_fix, gauge


def _null_space_hint(system, gauge):
    if system.needs_gauge and gauge == "none":
        return (
            "no traction/pressure boundary: the pressure is only determined up to a constant; "
            "use gauge='mean' or gauge='pin'"
        )
    return "check that every boundary side carries a condition and that alpha > 0"


class _Factorized:
    def __init__(self, system: DiscreteSystem):
        self.system = system
        self.K, self.rhs, self.free, self.u_fix, self.gauge = _reduced(system)
        try:
            self.lu = splu(self.K)
        except RuntimeError as exc:
            raise SolverError(f"singular system ({exc}); {_null_space_hint(system, self.gauge)}") from None
        # exact singularity survives LU as a roundoff-sized pivot
        piv = np.abs(self.lu.U.diagonal())
        if piv.size and piv.min() < PIVOT_TOL * piv.max():
            raise SolverError(
                f"singular system (pivot ratio {piv.min() / piv.max():.1e}); {_null_space_hint(system, self.gauge)}"
            )

    def solve(self, rhs):
        x = self.lu.solve(rhs)
        r = rhs - self.K @ x
        x = x + self.lu.solve(r)  # one refinement sweep
        r = rhs - self.K @ x
        scale = np.linalg.norm(rhs)
        rel = np.linalg.norm(r) / scale if scale > 0 else np.linalg.norm(r)
        if not np.isfinite(rel) or rel > RESIDUAL_TOL:
            raise SolverError(
                f"linear solve residual {rel:.3e} exceeds {RESIDUAL_TOL:g}; "
                f"{_null_space_hint(self.system, self.gauge)}"
            )
        return x, rel

    def expand(self, x):
        u = self.u_fix.copy()
        u[self.free] = x[: len(self.free)]
        multiplier = float(x[len(self.free)]) if self.gauge == "mean" else 0.0
        return u, multiplier


def solve_steady(system: DiscreteSystem) -> SolutionField:
    """Solve with Dirichlet elimination and a sparse LU factorization."""
    fac = _Factorized(system)
    x, rel = fac.solve(fac.rhs)
    u, lam = fac.expand(x)
    info = {"residual": rel, "gauge": fac.gauge, "multiplier": lam, "n_dofs": system.matrix.shape[0]}
    return SolutionField.from_coefficients(system.mesh, system.spec, u, system.t, info)


def solve(mesh: Mesh, spec: ProblemSpec, **kwargs) -> SolutionField:
    """Assemble and solve the steady problem in one call."""
    return solve_steady(assemble(mesh, spec, **kwargs))


# ---------------------------------------------------------------------------
# transient


@dataclass(frozen=True, eq=False)
class TransientState:
    solution: SolutionField
    previous: Optional[np.ndarray]
    step: int
    dt: float
    solver: Optional["TransientSolver"] = None

    @property
    def time(self) -> float:
        return self.solution.time


class TransientSolver:
    """Backward Euler with one factorization reused for every step.

    Dirichlet dofs must be the same set at all times; their values and the
    loads are evaluated at the new time level.
    """

    def __init__(self, mesh: Mesh, spec: ProblemSpec, dt=None, gauge="mean", stab=1.0):
        if spec.transient is None and dt is None:
            raise SpecError("transient solve requested but the spec has no transient options")
        self.dt = float(dt if dt is not None else spec.transient.dt)
        if not self.dt > 0:
            raise SpecError(f"time step must be positive, got dt={self.dt}")
        self.mesh, self.spec = mesh, spec
        self.asm = Assembler(mesh, spec, stab=stab)
        self.system = _system(self.asm, gauge, t=0.0, dt=self.dt, v_old=np.zeros((mesh.n_nodes, 2)))
        self.fac = _Factorized(self.system)
        self._fixed = self.system.fixed_dofs

    def initial_state(self) -> TransientState:
        tr = self.spec.transient
        x = self.mesh.nodes
        vel = tr.initial_velocity(x) if tr is not None else np.zeros((len(x), 2))
        p = np.full(self.mesh.n_vertices, tr.p0 if tr is not None else 0.0)
        sol = SolutionField(self.mesh, self.spec, vel, p, 0.0, {})
        return TransientState(sol, None, 0, self.dt, self)

    def step(self, state: TransientState) -> TransientState:
        v_old = state.solution.velocity
        t = state.time + self.dt
        dofs, vals = self.asm.dirichlet(t)
        if not np.array_equal(dofs, self._fixed):
            raise SpecError("Dirichlet dof set changed between time steps")
        fac = self.fac
        f = self.asm.load(t, v_old, self.dt)
        u_fix = np.zeros(len(f))
        u_fix[dofs] = vals
        rhs = f[fac.free] - self.system.matrix[fac.free] @ u_fix
        if fac.gauge == "mean":
            rhs = np.append(rhs, 0.0)
        x, rel = fac.solve(rhs)
        u = u_fix
        u[fac.free] = x[: len(fac.free)]
        info = {"residual": rel, "gauge": fac.gauge, "step": state.step + 1}
        sol = SolutionField.from_coefficients(self.mesh, self.spec, u, t, info)
        return TransientState(sol, v_old, state.step + 1, self.dt, self)


def step_transient(state: TransientState, spec: ProblemSpec) -> TransientState:
    """Advance ``state`` by one backward-Euler step."""
    solver = state.solver
    if solver is None or solver.spec is not spec or solver.mesh is not state.solution.mesh or solver.dt != state.dt:
        solver = TransientSolver(state.solution.mesh, spec, dt=state.dt)
    if not state.dt > 0:
        raise SpecError(f"time step must be positive, got dt={state.dt}")
    return solver.step(TransientState(state.solution, state.previous, state.step, state.dt, solver))


def march(mesh: Mesh, spec: ProblemSpec, callback=None, gauge="mean"):
    """Run from the initial condition to ``t_end``; returns the list of states.

    ``callback(state)`` is called for the initial state and after each step.
    """
    solver = TransientSolver(mesh, spec, gauge=gauge)
    state = solver.initial_state()
    states = [state]
    if callback:
        callback(state)
    for _ in range(spec.transient.n_steps):
        state = solver.step(state)
        states.append(state)
        if callback:
            callback(state)
    return states


# ---------------------------------------------------------------------------
# pointwise quantities


def _inverse_jacobian(mesh, elem, ref):
    _, dN2 = ShapeBasis(mesh.kind, 2).eval(ref)
    x = mesh.nodes[mesh.elements[elem]]
    return np.linalg.inv(np.einsum("nai,naj->nij", x, dN2))


def evaluate(solution: SolutionField, x):
    """Velocity ``(n, 2)`` and pressure ``(n,)``; a single point gives ``(2,)`` and a float."""
    single = np.ndim(x) == 1
    mesh = solution.mesh
    elem, ref = locate(mesh, x)
    N2, _ = ShapeBasis(mesh.kind, 2).eval(ref)
    N1, _ = ShapeBasis(mesh.kind, 1).eval(ref)
    v = np.einsum("na,nai->ni", N2, solution.velocity[mesh.elements[elem]])
    p = np.einsum("na,na->n", N1, solution.pressure[mesh.pressure_elements[elem]])
    return (v[0], float(p[0])) if single else (v, p)


def velocity_gradient(solution: SolutionField, x):
    """``L[n, i, j] = d v_i / d x_j``."""
    mesh = solution.mesh
    elem, ref = locate(mesh, x)
    _, dN2 = ShapeBasis(mesh.kind, 2).eval(ref)
    inv = _inverse_jacobian(mesh, elem, ref)
    G = np.einsum("naj,njk->nak", dN2, inv)
    return np.einsum("nai,nak->nik", solution.velocity[mesh.elements[elem]], G)


def strain_rate(solution: SolutionField, x):
    """Symmetric part of the velocity gradient."""
    single = np.ndim(x) == 1
    L = velocity_gradient(solution, np.atleast_2d(x))
    D = 0.5 * (L + np.transpose(L, (0, 2, 1)))
    return D[0] if single else D


def cauchy_stress(solution: SolutionField, x):
    """``-p I`` for Darcy, ``-p I + 2 mu D`` for Darcy-Brinkman."""
    single = np.ndim(x) == 1
    x = np.atleast_2d(x)
    _, p = evaluate(solution, x)
    T = -p[:, None, None] * np.eye(2)
    if solution.model == BRINKMAN:
        T = T + 2 * solution.spec.mu * strain_rate(solution, x)
    return T[0] if single else T


def global_divergence(solution: SolutionField) -> float:
    """``int div v`` over the domain."""
    g = element_geometry(solution.mesh)
    ve = solution.velocity[solution.mesh.elements]
    div = np.einsum("eqak,eak->eq", g.G2, ve)
    return float((div * g.wdet).sum())
