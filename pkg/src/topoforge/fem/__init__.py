from .mesh import StructuredMesh, select_nodes, EmptySelectionError
from .hex8 import hex8_stiffness
from .model import (
    Material,
    DirichletBC,
    LoadCase,
    assemble_force,
    dirichlet_data,
)
from .solve import solve_equilibrium, SolveReport, SingularSystemError

__all__ = [
    "StructuredMesh",
    "select_nodes",
    "EmptySelectionError",
    "hex8_stiffness",
    "Material",
    "DirichletBC",
    "LoadCase",
    "assemble_force",
    "dirichlet_data",
    "solve_equilibrium",
    "SolveReport",
    "SingularSystemError",
]
