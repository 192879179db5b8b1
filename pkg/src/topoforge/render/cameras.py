"""Six axis-aligned orthographic cameras fitted to the domain box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VIEW_IDS = ("front", "back", "left", "right", "top", "bottom")

# forward is the viewing direction, up the screen's vertical
_VIEW_AXES = {
    "front": ((0.0, 0.0, -1.0), (0.0, 1.0, 0.0)),
    "back": ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0)),
    "left": ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    "right": ((-1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    "top": ((0.0, -1.0, 0.0), (0.0, 0.0, -1.0)),
    "bottom": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
}


@dataclass(frozen=True)
class ViewCamera:
    view: str
    center: tuple[float, float, float]
    forward: tuple[float, float, float]
    up: tuple[float, float, float]
    half_width: float
    half_height: float

    @property
    def right(self) -> tuple[float, float, float]:
        r = np.cross(self.forward, self.up)
        return (float(r[0]), float(r[1]), float(r[2]))

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Screen coordinates (u right, v up) and depth along forward."""
        rel = np.asarray(points, float) - np.asarray(self.center)
        u = rel @ np.asarray(self.right)
        v = rel @ np.asarray(self.up)
        d = rel @ np.asarray(self.forward)
        return u, v, d

    def as_dict(self) -> dict:
        return {
            "view": self.view,
            "center": list(self.center),
            "forward": list(self.forward),
            "up": list(self.up),
            "half_width": self.half_width,
            "half_height": self.half_height,
        }


def six_cameras(
    bbox_min, bbox_max, aspect: float = 16 / 9, margin: float = 0.05
) -> dict[str, ViewCamera]:
    """Orthographic cameras centered on the box, fitted with a margin.

    The in-plane extent covers the projected box corners plus ``margin``,
    widened on one axis to honor the pixel aspect ratio, so geometry never
    clips and scale is identical for opposing views.
    """
    lo = np.asarray(bbox_min, float)
    hi = np.asarray(bbox_max, float)
    center = 0.5 * (lo + hi)
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1])
                        for z in (lo[2], hi[2])])

    cams = {}
    for view in VIEW_IDS:
        fwd, up = _VIEW_AXES[view]
        cam = ViewCamera(view, tuple(center), fwd, up, half_width=1.0, half_height=1.0)
        u, v, _ = cam.project(corners)
        half_w = float(np.abs(u).max()) * (1 + margin)
        half_h = float(np.abs(v).max()) * (1 + margin)
        if half_w / half_h < aspect:
            half_w = half_h * aspect
        else:
            half_h = half_w / aspect
        cams[view] = ViewCamera(view, tuple(center), fwd, up, half_w, half_h)
    return cams
