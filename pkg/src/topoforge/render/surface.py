"""Boundary-surface extraction from thresholded density fields.

Elements at or above the threshold count as solid. Every voxel face whose
neighbor is void (or outside the domain) is emitted as two triangles;
interior faces are dropped. Vertices are shared mesh nodes, so the surface
is welded by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fem import StructuredMesh

# (axis, side) -> the four node-corner offsets of that voxel face, wound so
# the quad splits into triangles (0,1,2) and (0,2,3) facing outward
_FACES = {
    ("x", 0): ((0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)),
    ("x", 1): ((1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)),
    ("y", 0): ((0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)),
    ("y", 1): ((0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)),
    ("z", 0): ((0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)),
    ("z", 1): ((0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)),
}


@dataclass(frozen=True)
class SurfaceMesh:
    """Triangle soup with shared vertices in physical coordinates."""

    vertices: np.ndarray  # (m, 3) float
    triangles: np.ndarray  # (t, 3) int32

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0


def _exposed(solid: np.ndarray, axis: int, side: int) -> np.ndarray:
    """Mask of solid voxels whose (axis, side) neighbor is void or outside."""
    pad = [(0, 0)] * 3
    pad[axis] = (1, 1)
    padded = np.pad(solid, pad, constant_values=False)
    shifted = np.roll(padded, -1 if side else 1, axis=axis)
    sl = [slice(1, -1) if a == axis else slice(None) for a in range(3)]
    return solid & ~shifted[tuple(sl)]


def extract_surface(
    densities: np.ndarray, mesh: StructuredMesh, threshold: float = 0.5
) -> SurfaceMesh:
    """Triangulated boundary of the voxel set {density >= threshold}."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    solid = mesh.element_grid(np.asarray(densities)) >= threshold

    hx, hy, hz = mesh.spacing
    quads = []
    for (axis_name, side), corners in _FACES.items():
        axis = "xyz".index(axis_name)
        ex, ey, ez = np.nonzero(_exposed(solid, axis, side))
        if len(ex) == 0:
            continue
        ids = np.empty((len(ex), 4), dtype=np.int64)
        for c, (dx, dy, dz) in enumerate(corners):
            ids[:, c] = mesh.node_index(ex + dx, ey + dy, ez + dz)
        quads.append(ids)

    if not quads:
        return SurfaceMesh(
            vertices=np.zeros((0, 3)), triangles=np.zeros((0, 3), dtype=np.int32)
        )

    ids = np.concatenate(quads, axis=0)
    tris = np.concatenate([ids[:, (0, 1, 2)], ids[:, (0, 2, 3)]], axis=0)

    used, remap = np.unique(tris, return_inverse=True)
    vertices = mesh.node_coords[used]
    triangles = remap.reshape(tris.shape).astype(np.int32)
    return SurfaceMesh(vertices=vertices, triangles=triangles)
