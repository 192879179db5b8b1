"""ASCII OBJ export for printable meshes.

The mesh is uniformly scaled so its longest bounding-box edge lands on the
target print size (120 mm by default); vertices are written in millimeters
with per-vertex normals and 1-based face indices.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .meshing import TriMesh

__all__ = ["export_obj", "load_obj"]


def export_obj(trimesh: TriMesh, path: str | Path, target_longest_edge: float = 120.0) -> Path:
    """Write ``trimesh`` to ``path`` scaled to the target longest edge (mm)."""
    if trimesh.is_empty:
        raise ValueError("cannot export an empty mesh")
    if target_longest_edge <= 0:
        raise ValueError("target_longest_edge must be positive")
    lo, hi = trimesh.bbox
    longest = float(np.max(hi - lo))
    if longest <= 0:
        raise ValueError("mesh has zero extent")
    scale = target_longest_edge / longest
    verts = (trimesh.vertices - lo) * scale

    path = Path(path)
    lines = [f"# {len(verts)} vertices, {len(trimesh.triangles)} faces, units mm"]
    for x, y, z in verts:
        lines.append(f"v {x:.8f} {y:.8f} {z:.8f}")
    for x, y, z in trimesh.normals:
        lines.append(f"vn {x:.8f} {y:.8f} {z:.8f}")
    for a, b, c in trimesh.triangles + 1:
        lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write OBJ to {path}: {exc}") from exc
    return path


def load_obj(path: str | Path) -> TriMesh:
    """Parse a v/vn/f OBJ file back into a TriMesh (for round-trip checks)."""
    verts: list[list[float]] = []
    normals: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            fields = line.split()
            if not fields or fields[0] == "#":
                continue
            if fields[0] == "v":
                verts.append([float(v) for v in fields[1:4]])
            elif fields[0] == "vn":
                normals.append([float(v) for v in fields[1:4]])
            elif fields[0] == "f":
                faces.append([int(f.split("/")[0]) - 1 for f in fields[1:4]])
    verts_arr = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    if not normals:
        normals = [[0.0, 0.0, 1.0]] * len(verts)
    return TriMesh(
        verts_arr,
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        np.asarray(normals, dtype=np.float64).reshape(-1, 3),
    )
