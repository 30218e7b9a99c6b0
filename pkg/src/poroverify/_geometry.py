"""Per-mesh cached quadrature geometry shared by assembly and post-processing."""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, ShapeBasis, quadrature_for

_CACHE: "weakref.WeakKeyDictionary[Mesh, dict]" = weakref.WeakKeyDictionary()


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Shape data at element quadrature points.

    ``N2``/``N1`` are reference values ``(q, nb)``; ``G2``/``G1`` physical
    gradients ``(e, q, nb, 2)``; ``wdet`` weights times ``|J|`` ``(e, q)``;
    ``xq`` physical points ``(e, q, 2)``.
    """

    N2: np.ndarray
    N1: np.ndarray
    G2: np.ndarray
    G1: np.ndarray
    wdet: np.ndarray
    xq: np.ndarray
    detJ: np.ndarray


def element_geometry(mesh: Mesh, degree: int = 4) -> ElementGeometry:
    per_mesh = _CACHE.setdefault(mesh, {})
    key = ("elem", degree)
    if key not in per_mesh:
        rule = quadrature_for(mesh.kind, degree)
        N2, dN2 = ShapeBasis(mesh.kind, 2).eval(rule.points)
        N1, dN1 = ShapeBasis(mesh.kind, 1).eval(rule.points)
        x = mesh.nodes[mesh.elements]
        J = np.einsum("eai,qaj->eqij", x, dN2)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        if np.any(det <= 0):
            raise ValueError("mesh has an element with non-positive Jacobian")
        inv = np.empty_like(J)
        inv[..., 0, 0] = J[..., 1, 1] / det
        inv[..., 1, 1] = J[..., 0, 0] / det
        inv[..., 0, 1] = -J[..., 0, 1] / det
        inv[..., 1, 0] = -J[..., 1, 0] / det
        G2 = np.einsum("qaj,eqjk->eqak", dN2, inv)
        G1 = np.einsum("qaj,eqjk->eqak", dN1, inv)
        xq = np.einsum("qa,eai->eqi", N2, x)
        per_mesh[key] = ElementGeometry(N2, N1, G2, G1, det * rule.weights, xq, det)
    return per_mesh[key]


@dataclass(frozen=True, eq=False)
class EdgeGeometry:
    """Quadrature on boundary edges: nodes ``(m, 3)`` in (start, end, mid)
    order, shape values ``(q, 3)``, weights times length ``(m, q)``, points
    ``(m, q, 2)`` and outward normals ``(m, 2)``."""

    nodes: np.ndarray
    N: np.ndarray
    wds: np.ndarray
    xq: np.ndarray
    normals: np.ndarray
    sides: np.ndarray


_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])


def edge_geometry(mesh: Mesh, n_points: int = 4) -> EdgeGeometry:
    per_mesh = _CACHE.setdefault(mesh, {})
    key = ("edge", n_points)
    if key not in per_mesh:
        t, w = np.polynomial.legendre.leggauss(n_points)
        N = np.column_stack([0.5 * t * (t - 1), 0.5 * t * (t + 1), 1 - t * t])
        dN = np.column_stack([t - 0.5, t + 0.5, -2 * t])
        nodes = mesh.edge_nodes()
        x = mesh.nodes[nodes]
        xq = np.einsum("qa,mai->mqi", N, x)
        tang = np.einsum("qa,mai->mqi", dN, x)
        ds = np.linalg.norm(tang, axis=2)
        sides = mesh.boundary_edges[:, 2]
        per_mesh[key] = EdgeGeometry(nodes, N, ds * w, xq, _NORMALS[sides], sides)
    return per_mesh[key]


def locate(mesh: Mesh, x) -> tuple:
    """Element ids and reference coordinates for points ``(n, 2)``.

    Relies on the tensor-grid layout of every mesh built by :mod:`mesh`.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xl, yl = mesh.xlines, mesh.ylines
    tol = 1e-10 * max(xl[-1] - xl[0], yl[-1] - yl[0])
    outside = (x[:, 0] < xl[0] - tol) | (x[:, 0] > xl[-1] + tol) | (x[:, 1] < yl[0] - tol) | (x[:, 1] > yl[-1] + tol)
    if outside.any():
        p = x[outside][0]
        raise ValueError(f"point ({p[0]:g}, {p[1]:g}) lies outside the mesh")
    i = np.clip(np.searchsorted(xl, x[:, 0], side="right") - 1, 0, len(xl) - 2)
    j = np.clip(np.searchsorted(yl, x[:, 1], side="right") - 1, 0, len(yl) - 2)
    s = np.clip((x[:, 0] - xl[i]) / (xl[i + 1] - xl[i]), 0.0, 1.0)
    t = np.clip((x[:, 1] - yl[j]) / (yl[j + 1] - yl[j]), 0.0, 1.0)
    cell = j * (len(xl) - 1) + i
    if mesh.kind == "Q9":
        return cell, np.column_stack([2 * s - 1, 2 * t - 1])
    upper = t > s
    elem = 2 * cell + upper
    ref = np.where(upper[:, None], np.column_stack([s, t - s]), np.column_stack([s - t, t]))
    return elem, ref

