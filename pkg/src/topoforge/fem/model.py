"""Material data, Dirichlet conditions, and load assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import StructuredMesh, select_nodes


@dataclass(frozen=True)
class Material:
    """Isotropic material with a void floor for density interpolation."""

    e0: float
    emin: float
    nu: float

    def __post_init__(self):
        if self.e0 <= 0 or self.emin <= 0:
            raise ValueError("moduli must be positive")
        if self.emin >= self.e0:
            raise ValueError("emin must be smaller than e0")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError("nu must be in [0, 0.5)")


@dataclass(frozen=True)
class DirichletBC:
    """Prescribed displacement on a node selection.

    ``fix`` is a per-axis mask (ux, uy, uz); at least one axis must be
    constrained. ``value`` applies to every fixed axis of the selection.
    """

    where: dict
    fix: tuple[bool, bool, bool]
    value: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not any(self.fix):
            raise ValueError("DirichletBC fixes no axis")


@dataclass(frozen=True)
class LoadCase:
    """Total force vector distributed equally over a node selection."""

    where: dict
    force: tuple[float, float, float]
    name: str = ""

    def __post_init__(self):
        if all(f == 0.0 for f in self.force):
            raise ValueError("load magnitude must be nonzero")


def dirichlet_data(
    mesh: StructuredMesh, bcs: list[DirichletBC]
) -> tuple[np.ndarray, np.ndarray]:
    """Resolve boundary conditions to a dof mask and prescribed values.

    Returns
    -------
    fixed : (n_dofs,) bool array
    values : (n_dofs,) float array, zero at free dofs
    """
    fixed = np.zeros(mesh.n_dofs, dtype=bool)
    values = np.zeros(mesh.n_dofs)
    for bc in bcs:
        nodes = select_nodes(mesh, bc.where, bc.name or "Dirichlet BC")
        for axis in range(3):
            if bc.fix[axis]:
                dofs = 3 * nodes + axis
                fixed[dofs] = True
                values[dofs] = bc.value
    return fixed, values


def assemble_force(mesh: StructuredMesh, loads: list[LoadCase]) -> np.ndarray:
    """Global force vector; each load is split equally over its nodes.

    No loads gives the zero vector. An empty node selection raises
    :class:`~topoforge.fem.mesh.EmptySelectionError` naming the predicate.
    """
    f = np.zeros(mesh.n_dofs)
    for load in loads:
        nodes = select_nodes(mesh, load.where, load.name or "load")
        share = 1.0 / nodes.size
        for axis, comp in enumerate(load.force):
            if comp != 0.0:
                np.add.at(f, 3 * nodes + axis, comp * share)
    return f
