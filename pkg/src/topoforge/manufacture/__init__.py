"""Post-processing the winning design into a printable OBJ mesh."""

from .meshing import TriMesh, marching_cubes
from .objio import export_obj, load_obj
from .supports import SupportPreset, add_supports, select_best

__all__ = [
    "SupportPreset",
    "select_best",
    "add_supports",
    "TriMesh",
    "marching_cubes",
    "export_obj",
    "load_obj",
]
