"""Structured and graded 2D meshes of Q9 quadrilaterals and T6 triangles.

All meshes are tensor-product grids: a set of vertex lines in x and y, with
mid-edge and centre nodes at geometric midpoints.  Node ``j * (2*nx + 1) + i``
sits at ``(X[i], Y[j])`` where ``X``/``Y`` interleave vertex lines and their
midpoints, so Q9 and T6 meshes built on the same lines share their nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Q9 = "Q9"
T6 = "T6"

SIDES = ("bottom", "right", "top", "left")

# local (start corner, end corner, mid node) for each element edge
EDGES = {
    Q9: ((0, 1, 4), (1, 2, 5), (2, 3, 6), (3, 0, 7)),
    T6: ((0, 1, 3), (1, 2, 4), (2, 0, 5)),
}

# reference coordinates of the local nodes
REF_NODES = {
    Q9: np.array(
        [[-1, -1], [1, -1], [1, 1], [-1, 1], [0, -1], [1, 0], [0, 1], [-1, 0], [0, 0]],
        dtype=float,
    ),
    T6: np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]], dtype=float),
}

REF_MEASURE = {Q9: 4.0, T6: 0.5}


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]``."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @classmethod
    def unit(cls) -> "Rect":
        return cls(0.0, 0.0, 1.0, 1.0)

    def contains(self, x, tol=1e-12) -> np.ndarray:
        x = np.atleast_2d(x)
        s = tol * max(self.width, self.height)
        return (
            (x[:, 0] >= self.x0 - s)
            & (x[:, 0] <= self.x1 + s)
            & (x[:, 1] >= self.y0 - s)
            & (x[:, 1] <= self.y1 + s)
        )


# ---------------------------------------------------------------------------
# shape functions


def _lagrange_1d(t):
    t = np.asarray(t, dtype=float)
    vals = np.stack([0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)], axis=-1)
    ders = np.stack([t - 0.5, -2.0 * t, t + 0.5], axis=-1)
    return vals, ders


# position of each Q9 local node in the 3x3 tensor layout
_Q9_IJ = ((0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (2, 1), (1, 2), (0, 1), (1, 1))


def _q2(pts):
    lx, dx = _lagrange_1d(pts[:, 0])
    ly, dy = _lagrange_1d(pts[:, 1])
    vals = np.empty((len(pts), 9))
    grads = np.empty((len(pts), 9, 2))
    for a, (i, j) in enumerate(_Q9_IJ):
        vals[:, a] = lx[:, i] * ly[:, j]
        grads[:, a, 0] = dx[:, i] * ly[:, j]
        grads[:, a, 1] = lx[:, i] * dy[:, j]
    return vals, grads


def _q1(pts):
    xi, eta = pts[:, 0], pts[:, 1]
    sx = np.array([-1.0, 1.0, 1.0, -1.0])
    sy = np.array([-1.0, -1.0, 1.0, 1.0])
    vals = 0.25 * (1 + sx * xi[:, None]) * (1 + sy * eta[:, None])
    grads = np.empty((len(pts), 4, 2))
    grads[:, :, 0] = 0.25 * sx * (1 + sy * eta[:, None])
    grads[:, :, 1] = 0.25 * sy * (1 + sx * xi[:, None])
    return vals, grads


def _p2(pts):
    xi, eta = pts[:, 0], pts[:, 1]
    l1, l2, l3 = 1.0 - xi - eta, xi, eta
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    L = (l1, l2, l3)
    vals = np.stack(
        [l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1), 4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1],
        axis=-1,
    )
    grads = np.empty((len(pts), 6, 2))
    for a in range(3):
        grads[:, a, :] = (4 * L[a] - 1)[:, None] * dl[a]
    for a, (i, j) in enumerate(((0, 1), (1, 2), (2, 0)), start=3):
        grads[:, a, :] = 4 * (L[i][:, None] * dl[j] + L[j][:, None] * dl[i])
    return vals, grads


def _p1(pts):
    xi, eta = pts[:, 0], pts[:, 1]
    vals = np.stack([1.0 - xi - eta, xi, eta], axis=-1)
    grads = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), (len(pts), 3, 2)).copy()
    return vals, grads


_BASES = {(Q9, 2): _q2, (Q9, 1): _q1, (T6, 2): _p2, (T6, 1): _p1}


@dataclass(frozen=True)
class ShapeBasis:
    """Lagrange basis on a reference element: order 2 for velocity, 1 for pressure."""

    kind: str
    order: int

    def __post_init__(self):
        if (self.kind, self.order) not in _BASES:
            raise ValueError(f"no basis for kind={self.kind!r} order={self.order}")

    @property
    def size(self) -> int:
        return {(Q9, 2): 9, (Q9, 1): 4, (T6, 2): 6, (T6, 1): 3}[(self.kind, self.order)]

    @property
    def nodes(self) -> np.ndarray:
        return REF_NODES[self.kind][: self.size]

    def eval(self, pts):
        """Values ``(n, nb)`` and reference gradients ``(n, nb, 2)`` at points ``(n, 2)``."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _BASES[(self.kind, self.order)](pts)


def shape_eval(basis: ShapeBasis, ref_point):
    """Evaluate a basis at one reference point; returns ``(values, gradients)``."""
    vals, grads = basis.eval(np.asarray(ref_point, dtype=float).reshape(1, 2))
    return vals[0], grads[0]


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int


_MAX_DEGREE = {Q9: 39, T6: 30}

# 6-point degree-4 rule on the unit triangle (Strang & Fix / Dunavant)
_A4, _B4 = 0.445948490915965, 0.091576213509771
_WA4, _WB4 = 0.223381589678011 / 2, 0.109951743655322 / 2


def _tri_degree4():
    pts = np.array(
        [
            [_A4, _A4],
            [1 - 2 * _A4, _A4],
            [_A4, 1 - 2 * _A4],
            [_B4, _B4],
            [1 - 2 * _B4, _B4],
            [_B4, 1 - 2 * _B4],
        ]
    )
    return pts, np.array([_WA4] * 3 + [_WB4] * 3)


def _tri_collapsed(degree):
    # Duffy map of a tensor Gauss rule; the (1-u) Jacobian adds one degree in u
    n = int(math.ceil((degree + 2) / 2))
    t, w = np.polynomial.legendre.leggauss(n)
    u, wu = 0.5 * (t + 1), 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    WU, WV = np.meshgrid(wu, wu, indexing="ij")
    pts = np.column_stack([U.ravel(), (V * (1 - U)).ravel()])
    return pts, (WU * WV * (1 - U)).ravel()


def quadrature_for(kind: str, degree: int = 4) -> QuadratureRule:
    """Quadrature rule on the reference element exact to ``degree``."""
    if kind not in _MAX_DEGREE:
        raise ValueError(f"unknown element kind {kind!r}")
    if degree < 0 or degree > _MAX_DEGREE[kind]:
        raise ValueError(f"unsupported quadrature degree {degree} for {kind} (max {_MAX_DEGREE[kind]})")
    if kind == Q9:
        n = max(1, int(math.ceil((degree + 1) / 2)))
        t, w = np.polynomial.legendre.leggauss(n)
        X, Y = np.meshgrid(t, t, indexing="ij")
        WX, WY = np.meshgrid(w, w, indexing="ij")
        return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), (WX * WY).ravel(), 2 * n - 1)
    if degree <= 1:
        return QuadratureRule(np.array([[1 / 3, 1 / 3]]), np.array([0.5]), 1)
    if degree <= 4:
        pts, w = _tri_degree4()
        return QuadratureRule(pts, w, 4)
    pts, w = _tri_collapsed(degree)
    return QuadratureRule(pts, w, degree)


# ---------------------------------------------------------------------------
# mesh


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable mesh of quadratic elements on a tensor-product grid.

    ``boundary_edges`` rows are ``(element, local edge, side index)`` with the
    side index pointing into :data:`SIDES`.
    """

    nodes: np.ndarray
    elements: np.ndarray
    kind: str
    boundary_edges: np.ndarray
    h_max: float
    xlines: np.ndarray
    ylines: np.ndarray
    tags: tuple = field(default=SIDES)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def nx(self) -> int:
        return len(self.xlines) - 1

    @property
    def ny(self) -> int:
        return len(self.ylines) - 1

    @property
    def rect(self) -> Rect:
        return Rect(self.xlines[0], self.ylines[0], self.xlines[-1], self.ylines[-1])

    @property
    def n_vertices(self) -> int:
        """Number of corner nodes, i.e. pressure degrees of freedom."""
        return len(self.vertex_nodes)

    @cached_property
    def vertex_nodes(self) -> np.ndarray:
        nc = 4 if self.kind == Q9 else 3
        return np.unique(self.elements[:, :nc])

    @cached_property
    def pressure_index(self) -> np.ndarray:
        """Map from node id to pressure dof (-1 for non-vertex nodes)."""
        idx = np.full(self.n_nodes, -1, dtype=np.int64)
        idx[self.vertex_nodes] = np.arange(len(self.vertex_nodes))
        return idx

    @cached_property
    def pressure_elements(self) -> np.ndarray:
        nc = 4 if self.kind == Q9 else 3
        return self.pressure_index[self.elements[:, :nc]]

    def edge_nodes(self, rows=None) -> np.ndarray:
        """Global ``(start, end, mid)`` node ids of boundary edges."""
        be = self.boundary_edges if rows is None else self.boundary_edges[rows]
        table = np.array(EDGES[self.kind])
        return self.elements[be[:, 0][:, None], table[be[:, 1]]]

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.edge_nodes().ravel())

    def side_nodes(self, side: str) -> np.ndarray:
        rows = self.boundary_edges[:, 2] == self.tags.index(side)
        return np.unique(self.edge_nodes(rows).ravel())

    def element_sizes(self) -> np.ndarray:
        """Per-element size: longest axis-aligned extent (side / base length)."""
        x = self.nodes[self.elements]
        return np.maximum(np.ptp(x[:, :, 0], axis=1), np.ptp(x[:, :, 1], axis=1))


def _interleave(lines):
    full = np.empty(2 * len(lines) - 1)
    full[0::2] = lines
    full[1::2] = 0.5 * (lines[:-1] + lines[1:])
    return full


def tensor_mesh(xlines: Sequence[float], ylines: Sequence[float], kind: str = Q9) -> Mesh:
    """Build a Q9 or T6 mesh on the grid spanned by the given vertex lines."""
    xlines = np.asarray(xlines, dtype=float)
    ylines = np.asarray(ylines, dtype=float)
    if kind not in (Q9, T6):
        raise ValueError(f"unknown element kind {kind!r}")
    if len(xlines) < 2 or len(ylines) < 2:
        raise ValueError("need at least one cell in each direction")
    if np.any(np.diff(xlines) <= 0) or np.any(np.diff(ylines) <= 0):
        raise ValueError("grid lines must be strictly increasing")
    nx, ny = len(xlines) - 1, len(ylines) - 1
    X, Y = _interleave(xlines), _interleave(ylines)
    row = 2 * nx + 1
    gx, gy = np.meshgrid(X, Y)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()

    def nid(di, dj):
        return (2 * cj + dj) * row + (2 * ci + di)

    if kind == Q9:
        elements = np.column_stack(
            [nid(0, 0), nid(2, 0), nid(2, 2), nid(0, 2), nid(1, 0), nid(2, 1), nid(1, 2), nid(0, 1), nid(1, 1)]
        )
        cell = np.arange(nx * ny)
        edges = []
        for mask, local, side in (
            (cj == 0, 0, 0),
            (ci == nx - 1, 1, 1),
            (cj == ny - 1, 2, 2),
            (ci == 0, 3, 3),
        ):
            e = cell[mask]
            edges.append(np.column_stack([e, np.full(len(e), local), np.full(len(e), side)]))
    else:
        # diagonal from lower-left to upper-right in every cell
        lower = np.column_stack([nid(0, 0), nid(2, 0), nid(2, 2), nid(1, 0), nid(2, 1), nid(1, 1)])
        upper = np.column_stack([nid(0, 0), nid(2, 2), nid(0, 2), nid(1, 1), nid(1, 2), nid(0, 1)])
        elements = np.empty((2 * nx * ny, 6), dtype=np.int64)
        elements[0::2] = lower
        elements[1::2] = upper
        cell = np.arange(nx * ny)
        edges = []
        for mask, off, local, side in (
            (cj == 0, 0, 0, 0),
            (ci == nx - 1, 0, 1, 1),
            (cj == ny - 1, 1, 1, 2),
            (ci == 0, 1, 2, 3),
        ):
            e = 2 * cell[mask] + off
            edges.append(np.column_stack([e, np.full(len(e), local), np.full(len(e), side)]))
    boundary = np.concatenate(edges).astype(np.int64)
    h = float(max(np.diff(xlines).max(), np.diff(ylines).max()))
    return Mesh(nodes, elements.astype(np.int64), kind, boundary, h, xlines, ylines)


def _check_counts(nx, ny):
    for name, n in (("nx", nx), ("ny", ny)):
        if int(n) != n or n < 1:
            raise ValueError(f"{name} must be a positive integer, got {n!r}")


def build_quad_mesh(nx: int, ny: int, rect: Rect | None = None) -> Mesh:
    """Uniform ``nx`` by ``ny`` mesh of Q9 elements."""
    _check_counts(nx, ny)
    rect = rect or Rect.unit()
    return tensor_mesh(np.linspace(rect.x0, rect.x1, nx + 1), np.linspace(rect.y0, rect.y1, ny + 1), Q9)


def build_tri_mesh(nx: int, ny: int, rect: Rect | None = None) -> Mesh:
    """Uniform mesh of ``2 * nx * ny`` T6 elements (each cell split along its rising diagonal)."""
    _check_counts(nx, ny)
    rect = rect or Rect.unit()
    return tensor_mesh(np.linspace(rect.x0, rect.x1, nx + 1), np.linspace(rect.y0, rect.y1, ny + 1), T6)


def graded_lines(
    a: float, b: float, n: int, grade_lo: bool, grade_hi: bool, grading: float, layers: int, zone: float | None = None
) -> np.ndarray:
    """Vertex lines on ``[a, b]``: uniform spacing ``(b - a) / n`` except for a zone at
    each graded end, split into ``layers`` cells shrinking by ``grading`` toward that end.

    ``zone`` is the width of each graded zone; by default one base cell.
    """
    length = b - a
    base = length / n
    zone = base if zone is None else float(zone)
    n_graded = int(grade_lo) + int(grade_hi)
    if n_graded and (zone <= 0 or n_graded * zone >= length * (1 - 1e-12)):
        raise ValueError(f"graded zone {zone} too wide for interval of length {length}")
    r = 1.0 / grading
    sizes = zone * (r - 1) / (r**layers - 1) * r ** np.arange(layers)
    ramp = np.concatenate([[0.0], np.cumsum(sizes)])
    ramp[-1] = zone
    lo = a + (zone if grade_lo else 0.0)
    hi = b - (zone if grade_hi else 0.0)
    n_mid = max(1, int(round((hi - lo) / base)))
    pieces = []
    if grade_lo:
        pieces.append(a + ramp[:-1])
    pieces.append(np.linspace(lo, hi, n_mid + 1))
    if grade_hi:
        pieces.append((b - ramp[::-1])[1:])
    out = np.concatenate(pieces)
    out[0], out[-1] = a, b
    return out


def refine_region(
    nx: int,
    ny: int,
    rect: Rect | None,
    region: Iterable[str],
    grading: float,
    layers: int,
    kind: str = Q9,
    zone: float | None = None,
) -> Mesh:
    """Conforming tensor-product mesh graded geometrically toward the tagged sides.

    Each tagged side gets a zone (one base cell wide unless ``zone`` is given)
    divided into ``layers`` rows/columns whose sizes shrink by the factor
    ``grading`` toward that side.  Keeping ``zone`` fixed across a family of
    base resolutions keeps the near-side cells identical between levels.
    """
    _check_counts(nx, ny)
    if not 0.0 < grading < 1.0:
        raise ValueError(f"grading must lie in the open interval (0, 1), got {grading}")
    if int(layers) != layers or layers < 1:
        raise ValueError(f"layers must be a positive integer, got {layers!r}")
    region = set(region)
    unknown = region - set(SIDES)
    if unknown:
        raise ValueError(f"unknown boundary tags {sorted(unknown)}; expected a subset of {SIDES}")
    if not region:
        raise ValueError("region must name at least one boundary side")
    rect = rect or Rect.unit()
    xl = graded_lines(rect.x0, rect.x1, nx, "left" in region, "right" in region, grading, layers, zone)
    yl = graded_lines(rect.y0, rect.y1, ny, "bottom" in region, "top" in region, grading, layers, zone)
    return tensor_mesh(xl, yl, kind)


def jacobian_determinants(mesh: Mesh, rule: QuadratureRule | None = None) -> np.ndarray:
    """Isoparametric Jacobian determinants, shape ``(n_elements, n_points)``."""
    rule = rule or quadrature_for(mesh.kind, 4)
    _, dN = ShapeBasis(mesh.kind, 2).eval(rule.points)
    x = mesh.nodes[mesh.elements]
    J = np.einsum("eai,qaj->eqij", x, dN)
    return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
