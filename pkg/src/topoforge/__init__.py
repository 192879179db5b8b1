"""Agent-steered 3D topology optimization.

A compliance-minimization SIMP solver on structured hexahedral meshes, a
deterministic software renderer for depth-colored design views, a
vision/judge agent loop that revises problem parameters, and manufacturing
export (supports, marching cubes, OBJ).
"""

__version__ = "0.1.0"
