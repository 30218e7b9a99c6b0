"""Mixed finite-element Darcy / Darcy-Brinkman solver with mechanics-based verification."""

from .mesh import Mesh, Rect, build_quad_mesh, build_tri_mesh, quadrature_for, refine_region, shape_eval
from .model import ProblemSpec, benchmark, benchmark_parameters, cells_for, mesh_for
from .fem import SolutionField, TransientSolver, assemble, solve, solve_steady
from .verify import (
    convergence_study,
    dissipation,
    max_principle_check,
    reciprocal_residual,
    total_mechanical_power,
    verify_solution,
    vorticity_field,
)

__version__ = "0.1.0"

__all__ = [
    "Mesh",
    "Rect",
    "build_quad_mesh",
    "build_tri_mesh",
    "quadrature_for",
    "refine_region",
    "shape_eval",
    "ProblemSpec",
    "benchmark",
    "benchmark_parameters",
    "cells_for",
    "mesh_for",
    "SolutionField",
    "TransientSolver",
    "assemble",
    "solve",
    "solve_steady",
    "convergence_study",
    "dissipation",
    "max_principle_check",
    "reciprocal_residual",
    "total_mechanical_power",
    "verify_solution",
    "vorticity_field",
]
