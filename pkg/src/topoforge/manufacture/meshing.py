"""Isosurface extraction from voxel density fields.

The density grid is padded with a zero shell so the extracted surface is
always closed, then run through marching cubes on the element-center scalar
field. A deterministic hash-based perturbation nudges values off the exact
iso level first: grid-aligned plateaus otherwise produce degenerate,
non-manifold configurations, and the perturbation resolves every tie the
same way on every run.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from skimage import measure

from ..fem import StructuredMesh

__all__ = ["TriMesh", "marching_cubes"]

_WELD_TOL = 1e-9


@dataclass(frozen=True)
class TriMesh:
    """Welded triangle surface with per-vertex normals."""

    vertices: np.ndarray  # (n, 3)
    triangles: np.ndarray  # (m, 3) int
    normals: np.ndarray  # (n, 3), unit length

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "normals", np.asarray(self.normals, dtype=np.float64).reshape(-1, 3))
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise ValueError("triangle index out of range")

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            zero = np.zeros(3)
            return zero, zero
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def extents(self) -> np.ndarray:
        lo, hi = self.bbox
        return hi - lo

    @cached_property
    def _edge_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for a, b, c in self.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                key = (int(u), int(v)) if u < v else (int(v), int(u))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def euler_characteristic(self) -> int:
        v = len(np.unique(self.triangles)) if len(self.triangles) else 0
        e = len(self._edge_counts)
        f = len(self.triangles)
        return v - e + f

    def is_closed_manifold(self) -> bool:
        """True when every edge is shared by exactly two triangles."""
        if self.is_empty:
            return False
        return all(n == 2 for n in self._edge_counts.values())


def _tie_break_noise(shape: tuple[int, int, int]) -> np.ndarray:
    """Deterministic per-cell perturbation, identical across runs and slices."""
    i, j, k = np.meshgrid(
        np.arange(shape[0], dtype=np.int64),
        np.arange(shape[1], dtype=np.int64),
        np.arange(shape[2], dtype=np.int64),
        indexing="ij",
    )
    h = ((i * 73856093) ^ (j * 19349663) ^ (k * 83492791)) % 1000003
    return (h + 1).astype(np.float64) * 1e-13


def _weld(vertices: np.ndarray, triangles: np.ndarray, normals: np.ndarray):
    quantized = np.round(vertices / _WELD_TOL).astype(np.int64)
    _, first, inverse = np.unique(quantized, axis=0, return_index=True, return_inverse=True)
    verts = vertices[first]
    norms = normals[first]
    tris = inverse[triangles]
    # drop triangles collapsed by welding
    keep = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 2] != tris[:, 0])
    return verts, tris[keep], norms


def marching_cubes(densities: np.ndarray, mesh: StructuredMesh, iso: float = 0.5) -> TriMesh:
    """Extract the iso-surface of a flat density field as a closed TriMesh.

    Vertices are in domain coordinates; a full-face solid interpolates exactly
    to the domain boundary against the zero padding.
    """
    if not 0.0 < iso < 1.0:
        raise ValueError(f"iso must be in (0, 1), got {iso}")
    grid = mesh.element_grid(np.asarray(densities, dtype=np.float64))
    volume = np.pad(grid, 1, mode="constant", constant_values=0.0)
    volume = volume + _tie_break_noise(volume.shape)
    if volume.max() < iso or volume.min() > iso:
        empty = np.zeros((0, 3))
        return TriMesh(empty, np.zeros((0, 3), dtype=np.int64), empty)

    spacing = mesh.spacing
    verts, faces, normals, _ = measure.marching_cubes(
        volume, level=iso, spacing=spacing, method="lewiner", allow_degenerate=False
    )
    # padded index i maps to element center (i - 0.5) * h
    verts = verts - 0.5 * np.asarray(spacing)
    verts, faces, normals = _weld(verts, faces, normals)
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    return TriMesh(verts, faces, normals / lengths)
