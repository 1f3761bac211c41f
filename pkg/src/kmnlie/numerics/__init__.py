"""Integration of reduced problems and method-of-lines cross checks."""

from .grids import SolutionGrid
from .ivp import CompactonEdge, IVPResult, ODEProblem, dp45_step, integrate_ivp
from .mol import BoundarySpec, PDEGrid, mol_solve, stable_dt
from .pipeline import bvp_pipeline, compare_grids, profile_interpolant, reconstruct

__all__ = [
    "SolutionGrid", "ODEProblem", "CompactonEdge", "IVPResult", "integrate_ivp",
    "dp45_step", "PDEGrid", "BoundarySpec", "mol_solve", "stable_dt",
    "reconstruct", "compare_grids", "bvp_pipeline", "profile_interpolant",
]
