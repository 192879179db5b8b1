"""Deterministic offline judges.

``stub_judge`` scores a design from its voxel geometry alone so the full
pipeline can run in CI without any model: richer boundary surface and more
skeleton branching both push the score up. ``FixedScoreJudge`` returns
preset scores by design index for replay tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage
from skimage.morphology import skeletonize

from ..fem import StructuredMesh
from .judge import DesignView, JudgeVerdict, snap_to_lattice

__all__ = ["stub_judge", "StubJudge", "FixedScoreJudge"]


def _exposed_faces(solid: np.ndarray) -> int:
    """Count solid-voxel faces adjacent to void or the domain boundary."""
    padded = np.pad(solid, 1, mode="constant", constant_values=False)
    count = 0
    for axis in range(3):
        for shift in (-1, 1):
            neighbor = np.roll(padded, shift, axis=axis)
            count += int(np.count_nonzero(padded & ~neighbor))
    return count


def stub_judge(densities: np.ndarray, mesh: StructuredMesh, threshold: float = 0.5) -> JudgeVerdict:
    """Score a thresholded design from surface richness and branching.

    score = 1 + 2 * norm_sa + 2 * norm_junctions, clamped to [1, 5] and
    snapped to the half-point lattice, where

    - norm_sa = min(1, (exposed faces per solid voxel - 2) / 4): a bulky
      solid has a low face-per-voxel ratio, thin members a high one;
    - norm_junctions = min(1, 10 * junction density of the 26-connectivity
      skeleton), junction density being the mean excess degree (over 2)
      per skeleton voxel.
    """
    solid = mesh.element_grid(densities) >= threshold
    n_solid = int(np.count_nonzero(solid))
    if n_solid == 0:
        return JudgeVerdict(score=1.0, justification="empty design: no solid voxels")

    faces = _exposed_faces(solid)
    ratio = faces / n_solid
    norm_sa = min(1.0, (ratio - 2.0) / 4.0)

    skel = skeletonize(solid).astype(bool)
    n_skel = int(np.count_nonzero(skel))
    if n_skel:
        kernel = np.ones((3, 3, 3), dtype=np.int64)
        degree = ndimage.convolve(skel.astype(np.int64), kernel, mode="constant") - 1
        excess = np.maximum(0, degree[skel] - 2).sum()
        junction_density = float(excess) / n_skel
    else:
        junction_density = 0.0
    norm_junctions = min(1.0, 10.0 * junction_density)

    raw = 1.0 + 2.0 * norm_sa + 2.0 * norm_junctions
    score, _ = snap_to_lattice(min(5.0, max(1.0, raw)))
    justification = (
        f"{ratio:.2f} exposed faces per solid voxel (surface term {norm_sa:.2f}); "
        f"skeleton junction density {junction_density:.3f} (branching term {norm_junctions:.2f})"
    )
    return JudgeVerdict(score=score, justification=justification)


@dataclass
class StubJudge:
    """Geometry-based judge usable wherever a model judge would be."""

    threshold: float = 0.5

    def verdicts(self, designs: Sequence[DesignView]) -> list[JudgeVerdict]:
        return [stub_judge(d.densities, d.mesh, self.threshold) for d in designs]


@dataclass(frozen=True)
class FixedScoreJudge:
    """Returns preset scores by design index; for replay and tie-break tests."""

    scores: tuple[float, ...]

    def __init__(self, scores: Sequence[float]):
        object.__setattr__(self, "scores", tuple(float(s) for s in scores))

    def verdicts(self, designs: Sequence[DesignView]) -> list[JudgeVerdict]:
        if len(designs) > len(self.scores):
            raise ValueError(
                f"{len(designs)} designs but only {len(self.scores)} preset scores"
            )
        return [
            JudgeVerdict(score=self.scores[i], justification="preset score")
            for i in range(len(designs))
        ]
