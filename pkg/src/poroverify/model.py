"""Problem descriptions: materials, body forces, boundary data and the benchmark catalog.

Everything here is non-dimensional unless stated otherwise.  Boundary
conditions are attached to the four sides of the rectangular domain; a side
may be split into spans carrying different condition kinds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .mesh import SIDES, Mesh, Rect, tensor_mesh, Q9

DARCY = "darcy"
BRINKMAN = "brinkman"

_MODEL_ALIASES = {
    "darcy": DARCY,
    "brinkman": BRINKMAN,
    "darcy-brinkman": BRINKMAN,
    "darcy_brinkman": BRINKMAN,
    "darcybrinkman": BRINKMAN,
}

VELOCITY = "velocity"
NORMAL_VELOCITY = "normal_velocity"
TRACTION = "traction"
PRESSURE = "pressure"

DIRICHLET_KINDS = (VELOCITY, NORMAL_VELOCITY)
NATURAL_KINDS = (TRACTION, PRESSURE)
MODEL_KINDS = {DARCY: (NORMAL_VELOCITY, PRESSURE), BRINKMAN: (VELOCITY, TRACTION)}

OUTWARD_NORMALS = {
    "bottom": np.array([0.0, -1.0]),
    "right": np.array([1.0, 0.0]),
    "top": np.array([0.0, 1.0]),
    "left": np.array([-1.0, 0.0]),
}


class SpecError(ValueError):
    """A problem description violates one of its invariants."""


def normalize_model(name: str) -> str:
    try:
        return _MODEL_ALIASES[str(name).strip().lower()]
    except KeyError:
        raise SpecError(f"unknown model {name!r}; expected 'darcy' or 'brinkman'") from None


# ---------------------------------------------------------------------------
# materials


@dataclass(frozen=True)
class FluidProperties:
    mu: float
    rho: float

    def __post_init__(self):
        if not (self.mu > 0 and self.rho > 0):
            raise SpecError(f"viscosity and density must be positive (mu={self.mu}, rho={self.rho})")


@dataclass(frozen=True)
class Uniform:
    """Homogeneous permeability."""

    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise SpecError(f"permeability must be positive, got {self.k}")

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.full(len(x), float(self.k))

    @property
    def homogeneous(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class Raster:
    """Permeability sampled bilinearly from grid values spanning ``extent``.

    ``values`` has shape ``(ny, nx)``; row 0 is the top of the extent, the way
    image-like datasets are usually stored.
    """

    values: np.ndarray
    extent: Rect

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise SpecError("raster values must be a non-empty 2D array")
        bad = np.argwhere(~(v > 0))
        if len(bad):
            r, c = bad[0]
            raise SpecError(f"non-positive permeability {v[r, c]} at row {r}, column {c}")
        object.__setattr__(self, "values", v)

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def homogeneous(self) -> bool:
        return False

    def _interpolator(self):
        v = self.values[::-1]  # bottom row first
        e = self.extent
        xs = np.linspace(e.x0, e.x1, max(self.nx, 2))
        ys = np.linspace(e.y0, e.y1, max(self.ny, 2))
        if self.nx == 1:
            v = np.repeat(v, 2, axis=1)
        if self.ny == 1:
            v = np.repeat(v, 2, axis=0)
        return RegularGridInterpolator((ys, xs), v, method="linear")

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = self.extent.contains(x, tol=1e-9)
        if not inside.all():
            p = x[~inside][0]
            raise SpecError(f"point ({p[0]:g}, {p[1]:g}) lies outside the raster extent {self.extent}")
        e = self.extent
        pts = np.column_stack([np.clip(x[:, 1], e.y0, e.y1), np.clip(x[:, 0], e.x0, e.x1)])
        if not hasattr(self, "_interp"):
            object.__setattr__(self, "_interp", self._interpolator())
        return self._interp(pts)


def alpha_at(perm, mu: float, x) -> np.ndarray:
    """Drag coefficient ``mu / k(x)``; a scalar point returns a scalar."""
    scalar = np.ndim(x) == 1
    a = mu / perm(x)
    return float(a[0]) if scalar else a


def load_permeability_raster(path, domain: Rect, L: float = 1.0, scale: float = 1.0) -> Raster:
    """Read a raster file: first line ``nx ny``, then ``nx*ny`` row-major values.

    The stored permeability is ``raw * scale / L**2``.
    """
    if not (L > 0 and scale > 0):
        raise SpecError("reference length and scale must be positive")
    with open(path) as fp:
        header = fp.readline().split()
        if len(header) != 2:
            raise SpecError(f"{path}: first line must be 'nx ny', got {' '.join(header)!r}")
        try:
            nx, ny = int(header[0]), int(header[1])
        except ValueError:
            raise SpecError(f"{path}: grid dimensions must be integers, got {' '.join(header)!r}") from None
        if nx < 1 or ny < 1:
            raise SpecError(f"{path}: grid dimensions must be positive, got {nx} x {ny}")
        try:
            raw = np.array(fp.read().split(), dtype=float)
        except ValueError as exc:
            raise SpecError(f"{path}: malformed value ({exc})") from None
    if raw.size != nx * ny:
        raise SpecError(f"{path}: expected {nx * ny} values for a {nx} x {ny} grid, found {raw.size}")
    values = raw.reshape(ny, nx)
    bad = np.argwhere(~(values > 0))
    if len(bad):
        r, c = bad[0]
        raise SpecError(f"{path}: non-positive value {values[r, c]} at row {r}, column {c}")
    return Raster(values * scale / L**2, domain)


# ---------------------------------------------------------------------------
# loads and boundary data


@dataclass(frozen=True, eq=False)
class BodyForce:
    """Specific body force ``b(x, t)``.

    ``potential`` is an optional scalar psi with ``rho * b = -grad psi``; when
    given the force is flagged conservative.
    """

    func: Callable
    potential: Optional[Callable] = None

    def __call__(self, x, t=0.0) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.asarray(self.func(x, t), dtype=float).reshape(len(x), 2)

    @property
    def conservative(self) -> bool:
        return self.potential is not None

    @classmethod
    def constant(cls, b) -> "BodyForce":
        b = np.asarray(b, dtype=float)
        potential = None
        if not b.any():
            potential = lambda x: np.zeros(len(np.atleast_2d(x)))  # noqa: E731
        return cls(lambda x, t: np.broadcast_to(b, (len(x), 2)).copy(), potential)

    @classmethod
    def zero(cls) -> "BodyForce":
        return cls.constant([0.0, 0.0])


def potential_mismatch(force: BodyForce, rho: float, x, step=1e-6) -> float:
    """Max over ``x`` of |rho*b + grad psi| with grad psi by central differences."""
    if force.potential is None:
        raise SpecError("body force has no potential")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    grad = np.empty_like(x)
    for d in range(2):
        e = np.zeros(2)
        e[d] = step
        grad[:, d] = (force.potential(x + e) - force.potential(x - e)) / (2 * step)
    return float(np.abs(rho * force(x) + grad).max())


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """Condition on part of one side.

    ``span`` limits the piece to a sub-interval of the side's running
    coordinate (x for bottom/top, y for left/right); ``None`` means the whole
    side.  ``value(x, t)`` returns ``(n, 2)`` vectors for velocity/traction and
    ``(n,)`` scalars for normal velocity/pressure.
    """

    side: str
    kind: str
    value: Callable
    span: Optional[tuple] = None

    def __post_init__(self):
        if self.side not in SIDES:
            raise SpecError(f"unknown side {self.side!r}")
        if self.kind not in DIRICHLET_KINDS + NATURAL_KINDS:
            raise SpecError(f"unknown boundary condition kind {self.kind!r}")

    @property
    def vector(self) -> bool:
        return self.kind in (VELOCITY, TRACTION)

    def evaluate(self, x, t=0.0) -> np.ndarray:
        x = np.atleast_2d(x)
        v = np.asarray(self.value(x, t), dtype=float)
        return v.reshape(len(x), 2) if self.vector else v.reshape(len(x))

    def covers(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.span is None:
            return np.ones(s.shape, dtype=bool)
        return (s >= self.span[0]) & (s <= self.span[1])


def side_coordinate(side: str, x) -> np.ndarray:
    x = np.atleast_2d(x)
    return x[:, 0] if side in ("bottom", "top") else x[:, 1]


def constant_bc(side, kind, value, span=None) -> BoundaryCondition:
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        f = lambda x, t: np.full(len(x), float(value))  # noqa: E731
    else:
        f = lambda x, t: np.broadcast_to(value, (len(x), 2)).copy()  # noqa: E731
    return BoundaryCondition(side, kind, f, span)


def pressure_traction(side, p, span=None) -> BoundaryCondition:
    """Traction ``-p n`` on a side, the Brinkman form of a pressure outlet."""
    return constant_bc(side, TRACTION, -float(p) * OUTWARD_NORMALS[side], span)


def parabolic_profile(center: float, width: float, peak: float = 1.0) -> Callable:
    """Quadratic bump in the running coordinate, zero outside ``center +- width/2``."""
    half = 0.5 * width

    def f(s):
        r = (np.asarray(s, dtype=float) - center) / half
        return np.where(np.abs(r) < 1.0, peak * (1.0 - r * r), 0.0)

    return f


@dataclass(frozen=True)
class TransientOptions:
    dt: float
    t_end: float
    v0: Optional[Callable] = None
    p0: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise SpecError(f"time step must be positive, got dt={self.dt}")
        if not self.t_end > 0:
            raise SpecError(f"final time must be positive, got t_end={self.t_end}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def initial_velocity(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.v0 is None:
            return np.zeros((len(x), 2))
        return np.asarray(self.v0(x), dtype=float).reshape(len(x), 2)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A complete steady or transient problem on a rectangle."""

    model: str
    domain: Rect
    fluid: FluidProperties
    permeability: object
    body_force: BodyForce
    bcs: tuple
    transient: Optional[TransientOptions] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    # coordinates the mesh should contain so span ends fall on vertices
    breaks_x: tuple = ()
    breaks_y: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "model", normalize_model(self.model))
        object.__setattr__(self, "bcs", tuple(self.bcs))
        allowed = MODEL_KINDS[self.model]
        for bc in self.bcs:
            if bc.kind not in allowed:
                raise SpecError(
                    f"{bc.kind} condition on the {bc.side} side is not allowed for the {self.model} model"
                )
        check_partition(self)

    @property
    def mu(self) -> float:
        return self.fluid.mu

    @property
    def rho(self) -> float:
        return self.fluid.rho

    def alpha(self, x) -> np.ndarray:
        return alpha_at(self.permeability, self.fluid.mu, np.atleast_2d(x))

    @property
    def has_natural_boundary(self) -> bool:
        return any(bc.kind in NATURAL_KINDS for bc in self.bcs)

    @property
    def all_dirichlet(self) -> bool:
        return not self.has_natural_boundary

    def with_transient(self, dt, t_end, v0=None, p0=None) -> "ProblemSpec":
        t = self.transient
        v0 = v0 if v0 is not None else (t.v0 if t else None)
        p0 = p0 if p0 is not None else (t.p0 if t else 0.0)
        return replace(self, transient=TransientOptions(dt, t_end, v0, p0))

    def steady(self) -> "ProblemSpec":
        return replace(self, transient=None)

    def document(self) -> dict:
        """JSON document this spec can be rebuilt from (catalog problems only)."""
        if self.name not in CATALOG:
            raise SpecError("only catalog problems serialize to a spec document")
        return {"benchmark": self.name, "model": self.model, "overrides": dict(self.params)}


def check_partition(spec: ProblemSpec) -> None:
    """Every side must be tiled exactly once by the spans of its pieces."""
    r = spec.domain
    limits = {"bottom": (r.x0, r.x1), "top": (r.x0, r.x1), "left": (r.y0, r.y1), "right": (r.y0, r.y1)}
    for side in SIDES:
        a, b = limits[side]
        spans = sorted(
            (bc.span if bc.span is not None else (a, b)) for bc in spec.bcs if bc.side == side
        )
        tol = 1e-12 * max(r.width, r.height)
        if not spans:
            raise SpecError(f"no boundary condition on the {side} side")
        pos = a
        for lo, hi in spans:
            if lo > pos + tol:
                raise SpecError(f"{side} side has no boundary condition on ({pos:g}, {lo:g})")
            if lo < pos - tol:
                raise SpecError(f"overlapping boundary conditions on the {side} side near {lo:g}")
            if hi <= lo:
                raise SpecError(f"empty span ({lo:g}, {hi:g}) on the {side} side")
            pos = hi
        if abs(pos - b) > tol:
            raise SpecError(f"{side} side has no boundary condition on ({pos:g}, {b:g})")


def snapped_lines(a: float, b: float, n: int, breaks: Sequence[float]) -> np.ndarray:
    """``n`` uniform cells on ``[a, b]`` with the nearest free line moved onto each break.

    A break whose nearest interior line is taken, or would cross a
    neighbour, gets a line of its own instead.
    """
    lines = list(np.linspace(a, b, n + 1))
    fixed = {a, b}
    for c in sorted(float(c) for c in breaks):
        if not a < c < b or c in fixed:
            continue
        order = np.argsort(np.abs(np.asarray(lines) - c))
        i = next((int(j) for j in order if lines[j] not in fixed), None)
        if i is not None and lines[i - 1] < c < lines[i + 1]:
            lines[i] = c
        else:
            lines.insert(int(np.searchsorted(lines, c)), c)
        fixed.add(c)
    lines = np.asarray(lines)
    if np.any(np.diff(lines) <= 0):
        raise SpecError(f"{n} cells are too few to resolve the boundary segments {list(breaks)}")
    return lines


def mesh_for(spec: ProblemSpec, nx: int, ny: int, kind: str = Q9) -> Mesh:
    """Uniform mesh of the spec's domain with vertex lines snapped to segment ends."""
    r = spec.domain
    return tensor_mesh(
        snapped_lines(r.x0, r.x1, nx, spec.breaks_x), snapped_lines(r.y0, r.y1, ny, spec.breaks_y), kind
    )


def cells_for(spec: ProblemSpec, one_over_h: float) -> tuple:
    """Cell counts giving ``h = 1/one_over_h`` in each direction (rounded up)."""
    r = spec.domain
    return (max(1, int(math.ceil(r.width * one_over_h - 1e-9))), max(1, int(math.ceil(r.height * one_over_h - 1e-9))))


# ---------------------------------------------------------------------------
# non-dimensionalization


@dataclass(frozen=True)
class DimensionalInputs:
    L: float
    g: float
    p_atm: float
    alpha: float = 0.0
    mu: float = 0.0
    rho: float = 0.0
    k: float = 0.0
    b: tuple = (0.0, 0.0)
    p0: float = 0.0
    vp: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class ScaledParameters:
    """Barred quantities; ``L, g, p_atm`` are kept for the inverse map."""

    L: float
    g: float
    p_atm: float
    alpha: float
    mu: float
    rho: float
    k: float
    b: tuple
    p0: float
    vp: tuple

    def length(self, x):
        return np.asarray(x) / self.L


def nondimensionalize(inputs: DimensionalInputs) -> ScaledParameters:
    L, g, p = inputs.L, inputs.g, inputs.p_atm
    if not (L > 0 and g > 0 and p > 0):
        raise SpecError(f"reference quantities must be positive (L={L}, g={g}, p_atm={p})")
    vs = math.sqrt(g * L)
    return ScaledParameters(
        L=L,
        g=g,
        p_atm=p,
        alpha=inputs.alpha * math.sqrt(g * L**3) / p,
        mu=inputs.mu * math.sqrt(g / L) / p,
        rho=inputs.rho * g * L / p,
        k=inputs.k / L**2,
        b=tuple(float(c) / g for c in inputs.b),
        p0=inputs.p0 / p,
        vp=tuple(float(c) / vs for c in inputs.vp),
    )


def redimensionalize(s: ScaledParameters) -> DimensionalInputs:
    L, g, p = s.L, s.g, s.p_atm
    vs = math.sqrt(g * L)
    return DimensionalInputs(
        L=L,
        g=g,
        p_atm=p,
        alpha=s.alpha * p / math.sqrt(g * L**3),
        mu=s.mu * p / math.sqrt(g / L),
        rho=s.rho * p / (g * L),
        k=s.k * L**2,
        b=tuple(c * g for c in s.b),
        p0=s.p0 * p,
        vp=tuple(c * vs for c in s.vp),
    )


# ---------------------------------------------------------------------------
# benchmark catalog


def _pick(params, defaults, model):
    out = {}
    for key, val in defaults.items():
        out[key] = val[model] if isinstance(val, dict) else val
    unknown = set(params) - set(out)
    if unknown:
        raise SpecError(f"unknown override(s) {sorted(unknown)}; allowed: {sorted(out)}")
    out.update(params)
    return out


def _fluid_and_perm(p):
    # alpha = mu / k fixes k for the given drag and viscosity
    if not p["alpha"] > 0:
        raise SpecError(f"drag coefficient alpha must be positive, got {p['alpha']}")
    return FluidProperties(float(p["mu"]), float(p["rho"])), Uniform(float(p["mu"]) / float(p["alpha"]))


def _transient(p, v0=None, p0=0.0):
    if p.get("dt") is None and p.get("t_end") is None:
        return None
    if p.get("dt") is None or p.get("t_end") is None:
        raise SpecError("transient runs need both dt and t_end")
    return TransientOptions(float(p["dt"]), float(p["t_end"]), v0, p0)


def _zero_walls(model, sides):
    kind = VELOCITY if model == BRINKMAN else NORMAL_VELOCITY
    val = [0.0, 0.0] if model == BRINKMAN else 0.0
    return [constant_bc(s, kind, val) for s in sides]


def _split_side(model, side, span, natural_bc, a, b):
    """Zero-velocity pieces around a natural-condition span on one side."""
    kind = VELOCITY if model == BRINKMAN else NORMAL_VELOCITY
    val = [0.0, 0.0] if model == BRINKMAN else 0.0
    out = [natural_bc]
    if span[0] > a:
        out.append(constant_bc(side, kind, val, (a, span[0])))
    if span[1] < b:
        out.append(constant_bc(side, kind, val, (span[1], b)))
    return out


def _outlet(model, side, p, span):
    if model == BRINKMAN:
        return pressure_traction(side, p, span)
    return constant_bc(side, PRESSURE, p, span)


def _body_force(model, params):
    p = _pick(params, {"alpha": 1.0, "mu": {DARCY: 1.0, BRINKMAN: 0.001}, "rho": 1.0, "a": 10.0, "dt": None, "t_end": None}, model)
    fluid, perm = _fluid_and_perm(p)
    a, rho = float(p["a"]), fluid.rho

    def b(x, t):
        return (a / rho) * np.column_stack([np.sin(np.pi * x[:, 0]), np.cos(np.pi * x[:, 1])])

    def psi(x):
        x = np.atleast_2d(x)
        return (a / np.pi) * (np.cos(np.pi * x[:, 0]) - np.sin(np.pi * x[:, 1]))

    return dict(
        domain=Rect.unit(),
        fluid=fluid,
        permeability=perm,
        body_force=BodyForce(b, psi),
        bcs=_zero_walls(model, SIDES),
        transient=_transient(p),
        params=p,
    )


def _lid_cavity(model, params):
    if model == DARCY:
        raise SpecError("the lid-driven cavity is incompatible with Darcy equations (tangential lid velocity)")
    p = _pick(params, {"alpha": 1.0, "mu": 1.0, "rho": 1.0, "lid_velocity": 1.0, "dt": None, "t_end": None}, model)
    fluid, perm = _fluid_and_perm(p)
    # lid first so the zero walls own the two top corner nodes
    bcs = [constant_bc("top", VELOCITY, [float(p["lid_velocity"]), 0.0])] + _zero_walls(model, ("bottom", "left", "right"))
    return dict(
        domain=Rect.unit(),
        fluid=fluid,
        permeability=perm,
        body_force=BodyForce.zero(),
        bcs=bcs,
        transient=_transient(p),
        params=p,
    )


_PIPE_DEFAULTS = {
    "alpha": 1.0,
    "mu": {DARCY: 1.0, BRINKMAN: 0.001},
    "rho": 1.0,
    "b": [1.0, 1.0],
    "inlet_center": 0.8,
    "outlet_center": 0.8,
    "segment_width": 0.2,
    "peak": 1.0,
    "p_atm": 1.0,
    "dt": None,
    "t_end": None,
}


def _inlet_bc(model, prof):
    # inflow through the left side: v_x = profile, so v.n = -profile
    if model == BRINKMAN:
        return BoundaryCondition("left", VELOCITY, lambda x, t: np.column_stack([prof(x[:, 1]), 0 * x[:, 1]]))
    return BoundaryCondition("left", NORMAL_VELOCITY, lambda x, t: -prof(x[:, 1]))


def _pipe_bend_velocity(model, params):
    p = _pick(params, _PIPE_DEFAULTS, model)
    fluid, perm = _fluid_and_perm(p)
    w = float(p["segment_width"])
    inlet = parabolic_profile(float(p["inlet_center"]), w, float(p["peak"]))
    outlet = parabolic_profile(float(p["outlet_center"]), w, float(p["peak"]))
    if model == BRINKMAN:
        out_bc = BoundaryCondition("bottom", VELOCITY, lambda x, t: np.column_stack([0 * x[:, 0], -outlet(x[:, 0])]))
    else:
        out_bc = BoundaryCondition("bottom", NORMAL_VELOCITY, lambda x, t: outlet(x[:, 0]))
    bcs = [_inlet_bc(model, inlet), out_bc] + _zero_walls(model, ("top", "right"))
    ci, co = float(p["inlet_center"]), float(p["outlet_center"])
    return dict(
        domain=Rect.unit(),
        fluid=fluid,
        permeability=perm,
        body_force=BodyForce.constant(p["b"]),
        bcs=bcs,
        transient=_transient(p),
        params=p,
        breaks_x=(co - w / 2, co + w / 2),
        breaks_y=(ci - w / 2, ci + w / 2),
    )


def _pipe_bend_pressure(model, params):
    p = _pick(params, _PIPE_DEFAULTS, model)
    fluid, perm = _fluid_and_perm(p)
    w = float(p["segment_width"])
    ci, co = float(p["inlet_center"]), float(p["outlet_center"])
    inlet = parabolic_profile(ci, w, float(p["peak"]))
    span = (co - w / 2, co + w / 2)
    bcs = [_inlet_bc(model, inlet)]
    bcs += _split_side(model, "bottom", span, _outlet(model, "bottom", float(p["p_atm"]), span), 0.0, 1.0)
    bcs += _zero_walls(model, ("top", "right"))
    return dict(
        domain=Rect.unit(),
        fluid=fluid,
        permeability=perm,
        body_force=BodyForce.constant(p["b"]),
        bcs=bcs,
        transient=_transient(p),
        params=p,
        breaks_x=span,
        breaks_y=(ci - w / 2, ci + w / 2),
    )


def slab_initial_velocity(W: float, L: float) -> Callable:
    """Initial field ``v_x = v_y = sin(pi x / W) sin(pi y / L)``."""

    def v0(x):
        x = np.atleast_2d(x)
        s = np.sin(np.pi * x[:, 0] / W) * np.sin(np.pi * x[:, 1] / L)
        return np.column_stack([s, s])

    return v0


def _pressure_slab(model, params):
    p = _pick(
        params,
        {"alpha": 1.0, "mu": 0.001, "rho": 1.0, "p_inj": 5.0, "p_atm": 1.0, "W": 0.2, "L": 1.0, "dt": None, "t_end": None},
        model,
    )
    fluid, perm = _fluid_and_perm(p)
    W, L = float(p["W"]), float(p["L"])
    bcs = [_outlet(model, "left", float(p["p_inj"]), None), _outlet(model, "right", float(p["p_atm"]), None)]
    bcs += _zero_walls(model, ("bottom", "top"))
    return dict(
        domain=Rect(0.0, 0.0, W, L),
        fluid=fluid,
        permeability=perm,
        body_force=BodyForce.zero(),
        bcs=bcs,
        transient=_transient(p, slab_initial_velocity(W, L), float(p["p_atm"])),
        params=p,
    )


def _pressure_driven(model, params):
    p = _pick(
        params,
        {
            "alpha": 1.0,
            "mu": {DARCY: 1.0, BRINKMAN: 0.001},
            "rho": 1.0,
            "p_inj": 5.0,
            "p_atm": 1.0,
            "outlet_center": 0.5,
            "segment_width": 0.2,
            "dt": None,
            "t_end": None,
        },
        model,
    )
    fluid, perm = _fluid_and_perm(p)
    c, w = float(p["outlet_center"]), float(p["segment_width"])
    span = (c - w / 2, c + w / 2)
    bcs = [_outlet(model, "left", float(p["p_inj"]), None)]
    bcs += _split_side(model, "right", span, _outlet(model, "right", float(p["p_atm"]), span), 0.0, 1.0)
    bcs += _zero_walls(model, ("bottom", "top"))
    return dict(
        domain=Rect.unit(),
        fluid=fluid,
        permeability=perm,
        body_force=BodyForce.zero(),
        bcs=bcs,
        transient=_transient(p),
        params=p,
        breaks_y=span,
    )


def _reservoir(model, params):
    p = _pick(
        params,
        {
            "mu": 0.001,
            "rho": 1.0,
            "k": 0.001,
            "p_inj": 5.0,
            "p_atm": 1.0,
            "length": 2.0,
            "height": 1.0,
            "well_width": 0.2,
            "L_ref": 384.0,
            "raster": None,
            "raster_scale": 1.0,
            "dt": None,
            "t_end": None,
        },
        model,
    )
    fluid = FluidProperties(float(p["mu"]), float(p["rho"]))
    domain = Rect(0.0, 0.0, float(p["length"]), float(p["height"]))
    if p["raster"]:
        perm = load_permeability_raster(p["raster"], domain, float(p["L_ref"]), float(p["raster_scale"]))
    else:
        perm = Uniform(float(p["k"]))
    c, w = 0.5 * domain.width, float(p["well_width"])
    span = (c - w / 2, c + w / 2)
    bcs = [_outlet(model, "left", float(p["p_inj"]), None), _outlet(model, "right", float(p["p_inj"]), None)]
    bcs += _split_side(model, "top", span, _outlet(model, "top", float(p["p_atm"]), span), domain.x0, domain.x1)
    bcs += _zero_walls(model, ("bottom",))
    return dict(
        domain=domain,
        fluid=fluid,
        permeability=perm,
        body_force=BodyForce.zero(),
        bcs=bcs,
        transient=_transient(p),
        params=p,
        breaks_x=span,
    )


CATALOG = {
    "body_force": _body_force,
    "lid_cavity": _lid_cavity,
    "pipe_bend_velocity": _pipe_bend_velocity,
    "pipe_bend_pressure": _pipe_bend_pressure,
    "pressure_slab": _pressure_slab,
    "pressure_driven": _pressure_driven,
    "reservoir": _reservoir,
}


def benchmark(name: str, model: str = BRINKMAN, **overrides) -> ProblemSpec:
    """Catalog problem with table defaults; keyword overrides replace parameters."""
    if name not in CATALOG:
        raise SpecError(f"unknown benchmark {name!r}; choose from {sorted(CATALOG)}")
    model = normalize_model(model)
    try:
        parts = CATALOG[name](model, overrides)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"invalid override for {name}: {exc}") from None
    params = {k: v for k, v in parts.pop("params").items() if k in overrides}
    return ProblemSpec(model=model, name=name, params=params, **parts)


def benchmark_parameters(name: str, model: str = BRINKMAN) -> dict:
    """Full default parameter table of a catalog problem."""
    if name not in CATALOG:
        raise SpecError(f"unknown benchmark {name!r}; choose from {sorted(CATALOG)}")
    return dict(CATALOG[name](normalize_model(model), {})["params"])


def spec_from_document(doc) -> ProblemSpec:
    """Build a spec from ``{"benchmark": ..., "model": ..., "overrides": {...}}``."""
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a JSON object")
    unknown = set(doc) - {"benchmark", "model", "overrides"}
    if unknown:
        raise SpecError(f"unknown spec keys {sorted(unknown)}")
    if "benchmark" not in doc:
        raise SpecError("spec document needs a 'benchmark' key")
    overrides = doc.get("overrides", {}) or {}
    if not isinstance(overrides, dict):
        raise SpecError("'overrides' must be an object")
    return benchmark(doc["benchmark"], doc.get("model", BRINKMAN), **overrides)


def load_spec(path) -> ProblemSpec:
    with open(path) as fp:
        text = fp.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return spec_from_document(doc)
