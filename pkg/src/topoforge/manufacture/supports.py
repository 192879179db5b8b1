"""Design selection and print-support geometry.

The phone-stand support rule set turns a free-form optimized field into a
printable part: material strictly above the diagonal resting plane is cut
away, a reinforcement band of fixed thickness is imposed just below that
plane, an anti-slip lip is added at the lower front edge, and a solid base
layer runs along the bottom. Thicknesses scale with mesh resolution so the
same proportions hold at any grid size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..fem import StructuredMesh

if TYPE_CHECKING:  # pragma: no cover
    from ..agents.orchestrator import RunLog

__all__ = ["SupportPreset", "select_best", "add_supports"]


@dataclass(frozen=True)
class SupportPreset:
    """Support thicknesses in elements for one named rule set."""

    name: str  # phone_stand | none
    band: int = 0
    lip_thickness: int = 0
    lip_height: int = 0
    base: int = 0

    def __post_init__(self):
        if self.name not in ("phone_stand", "none"):
            raise ValueError(f"unknown support preset {self.name!r}")
        if self.name != "none":
            for label in ("band", "lip_thickness", "lip_height", "base"):
                if getattr(self, label) < 1:
                    raise ValueError(f"{label} must be at least 1 element")

    @classmethod
    def for_mesh(cls, name: str, mesh: StructuredMesh) -> "SupportPreset":
        if name == "none":
            return cls("none")
        if name != "phone_stand":
            raise ValueError(f"unknown support preset {name!r}")
        return cls(
            "phone_stand",
            band=math.ceil(mesh.nely / 32),
            lip_thickness=math.ceil(mesh.nelx / 32),
            lip_height=math.ceil(mesh.nely / 16),
            base=math.ceil(mesh.nely / 32),
        )


def select_best(log: "RunLog") -> int:
    """Index of the design to manufacture: highest score, ties to most recent."""
    best, best_score = None, None
    for i, record in enumerate(log.records):
        if record.verdict is None:
            raise ValueError(f"record {i} has no judge verdict; judge the run first")
        if best_score is None or record.verdict.score >= best_score:
            best, best_score = i, record.verdict.score
    if best is None:
        raise ValueError("run log has no records")
    return best


def add_supports(
    densities: np.ndarray,
    mesh: StructuredMesh,
    preset: SupportPreset | str = "phone_stand",
) -> np.ndarray:
    """Apply a support rule set; returns a new flat density array.

    Rules (phone_stand), evaluated on element centroids, cut first then add:
    1. zero every voxel strictly above the diagonal plane y = ly * (1 - x/lx);
    2. solidify the band within ``band`` elements below that plane;
    3. solidify the lip at x in [0, lip_thickness*hx], y in [0, lip_height*hy];
    4. solidify the base layer y in [0, base*hy].

    The added regions lie on or below the plane, so the operation is
    idempotent and never removes material except by rule 1.
    """
    if isinstance(preset, str):
        preset = SupportPreset.for_mesh(preset, mesh)
    out = np.asarray(densities, dtype=np.float64).copy()
    if out.size != mesh.n_elements:
        raise ValueError(f"expected {mesh.n_elements} densities, got {out.size}")
    if preset.name == "none":
        return out

    hx, hy, _ = mesh.spacing
    cx, cy = mesh.element_centroids[:, 0], mesh.element_centroids[:, 1]
    plane_y = mesh.ly * (1.0 - cx / mesh.lx)

    above = cy > plane_y
    band = ~above & (cy > plane_y - preset.band * hy)
    lip = (cx < preset.lip_thickness * hx) & (cy < preset.lip_height * hy)
    base = cy < preset.base * hy

    out[above] = 0.0
    out[band | lip | base] = 1.0
    return out
