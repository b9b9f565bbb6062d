"""Numerical laboratory for a mixed forward/backward parabolic problem."""

from .grid_core import Field, GridError, SideData, SpaceTimeGrid, make_grid
from .mixed_solver import MixedProblem, SolverError, solve_adjoint, solve_mixed

__all__ = ["Field", "GridError", "SideData", "SpaceTimeGrid", "make_grid",
           "MixedProblem", "SolverError", "solve_adjoint", "solve_mixed"]
__version__ = "0.1.0"
