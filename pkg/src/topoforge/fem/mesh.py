"""Structured hexahedral mesh on a box domain.

Axis conventions used throughout the package: x spans ``[0, lx]``, y spans
``[0, ly]`` (vertical for the bundled presets), z spans ``[0, lz]``. Nodes
and elements are enumerated lexicographically with x fastest, then y, then
z, so node ``1`` sits at ``(hx, 0, 0)`` and node ``nelx + 1`` sits directly
above node ``0`` in y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class EmptySelectionError(ValueError):
    """A node predicate matched no nodes."""


@dataclass(frozen=True)
class StructuredMesh:
    """Regular grid of 8-node hexahedral elements.

    Parameters
    ----------
    nelx, nely, nelz : int
        Element counts per axis (each >= 1).
    lx, ly, lz : float
        Physical domain extents (each > 0).
    """

    nelx: int
    nely: int
    nelz: int
    lx: float
    ly: float
    lz: float

    def __post_init__(self):
        if min(self.nelx, self.nely, self.nelz) < 1:
            raise ValueError("element counts must be >= 1")
        if min(self.lx, self.ly, self.lz) <= 0:
            raise ValueError("domain extents must be positive")

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.lx / self.nelx, self.ly / self.nely, self.lz / self.nelz)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nelx, self.nely, self.nelz)

    @property
    def n_elements(self) -> int:
        return self.nelx * self.nely * self.nelz

    @property
    def n_nodes(self) -> int:
        return (self.nelx + 1) * (self.nely + 1) * (self.nelz + 1)

    @property
    def n_dofs(self) -> int:
        return 3 * self.n_nodes

    def node_index(self, ix, iy, iz):
        """Lexicographic node id for grid position (ix, iy, iz)."""
        nx, ny = self.nelx + 1, self.nely + 1
        return ix + nx * (iy + ny * iz)

    @cached_property
    def node_coords(self) -> np.ndarray:
        """(n_nodes, 3) array of node positions, lexicographic order."""
        hx, hy, hz = self.spacing
        nx, ny, nz = self.nelx + 1, self.nely + 1, self.nelz + 1
        ix, iy, iz = np.meshgrid(
            np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
        )
        coords = np.empty((self.n_nodes, 3))
        flat = self.node_index(ix, iy, iz).ravel()
        coords[flat, 0] = (ix * hx).ravel()
        coords[flat, 1] = (iy * hy).ravel()
        coords[flat, 2] = (iz * hz).ravel()
        return coords

    @cached_property
    def element_centroids(self) -> np.ndarray:
        """(n_elements, 3) array of element centroid positions."""
        hx, hy, hz = self.spacing
        ex, ey, ez = np.meshgrid(
            np.arange(self.nelx),
            np.arange(self.nely),
            np.arange(self.nelz),
            indexing="ij",
        )
        flat = (ex + self.nelx * (ey + self.nely * ez)).ravel()
        out = np.empty((self.n_elements, 3))
        out[flat, 0] = ((ex + 0.5) * hx).ravel()
        out[flat, 1] = ((ey + 0.5) * hy).ravel()
        out[flat, 2] = ((ez + 0.5) * hz).ravel()
        return out

    @cached_property
    def element_dofs(self) -> np.ndarray:
        """(n_elements, 24) dof indices per element.

        Local node order follows the trilinear reference cube: the four
        bottom-face corners counterclockwise, then the top face, matching
        the shape-function order used by :func:`topoforge.fem.hex8_stiffness`.
        Each node contributes dofs (3n, 3n+1, 3n+2) = (ux, uy, uz).
        """
        ids = np.arange(self.n_elements)
        ex = ids % self.nelx
        ey = (ids // self.nelx) % self.nely
        ez = ids // (self.nelx * self.nely)
        corners = [
            (0, 0, 0),
            (1, 0, 0),
            (1, 1, 0),
            (0, 1, 0),
            (0, 0, 1),
            (1, 0, 1),
            (1, 1, 1),
            (0, 1, 1),
        ]
        nodes = np.stack(
            [self.node_index(ex + dx, ey + dy, ez + dz) for dx, dy, dz in corners],
            axis=1,
        )
        dofs = (3 * nodes[:, :, None] + np.arange(3)[None, None, :]).reshape(-1, 24)
        return np.ascontiguousarray(dofs.astype(np.int32))

    def element_grid(self, flat: np.ndarray) -> np.ndarray:
        """View a flat element field as a (nelx, nely, nelz) grid."""
        if flat.shape[0] != self.n_elements:
            raise ValueError("field length does not match element count")
        return flat.reshape(self.nelz, self.nely, self.nelx).transpose(2, 1, 0)

    def flatten_grid(self, grid: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`element_grid`."""
        return np.ascontiguousarray(grid.transpose(2, 1, 0)).reshape(-1)


def _axis_mask(coord: np.ndarray, rule, tol: float) -> np.ndarray:
    """Boolean mask for one axis constraint.

    ``rule`` is either a number (equality within tol) or a mapping with
    ``op`` in {eq, le, ge} and ``value``.
    """
    if isinstance(rule, dict):
        op = rule.get("op", "eq")
        value = float(rule["value"])
    else:
        op, value = "eq", float(rule)
    if op == "eq":
        return np.abs(coord - value) <= tol
    if op == "le":
        return coord <= value + tol
    if op == "ge":
        return coord >= value - tol
    raise ValueError(f"unknown comparator {op!r}")


def select_nodes(mesh: StructuredMesh, where: dict, name: str = "") -> np.ndarray:
    """Resolve a node predicate to node indices.

    Parameters
    ----------
    mesh : StructuredMesh
    where : dict
        Axis constraints keyed by "x", "y", "z" (number for equality, or
        {"op": "eq"|"le"|"ge", "value": v}), optionally combined with
        ``{"diagonal": "xy"}`` which selects nodes within half a y-spacing
        of the inclined plane y = ly * (1 - x / lx), spanning all z.
        Tolerances are half the spacing of the constrained axis.
    name : str
        Label used in the error message when nothing matches.

    Returns
    -------
    ndarray of node indices (sorted, unique).

    Raises
    ------
    EmptySelectionError
        If the predicate selects no nodes.
    """
    if not where:
        raise ValueError("empty node predicate")
    coords = mesh.node_coords
    spacing = mesh.spacing
    mask = np.ones(mesh.n_nodes, dtype=bool)
    for col, axis in enumerate(("x", "y", "z")):
        if where.get(axis) is not None:
            mask &= _axis_mask(coords[:, col], where[axis], 0.5 * spacing[col])
    diag = where.get("diagonal")
    if diag is not None:
        if diag != "xy":
            raise ValueError(f"unknown diagonal selector {diag!r}")
        plane_y = mesh.ly * (1.0 - coords[:, 0] / mesh.lx)
        mask &= np.abs(coords[:, 1] - plane_y) <= 0.5 * spacing[1]
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        label = name or repr(where)
        raise EmptySelectionError(f"node predicate {label} selects no nodes")
    return idx
