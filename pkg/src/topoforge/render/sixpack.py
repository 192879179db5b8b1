"""Render the six standard views of a thresholded design, with force and
boundary-condition glyphs, and persist them alongside a JSON sidecar."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..fem import DirichletBC, LoadCase, StructuredMesh, select_nodes
from .cameras import VIEW_IDS, ViewCamera, six_cameras
from .raster import ArrowGlyph, MarkerGlyph, depth_colorize, render_view
from .surface import extract_surface

_MAX_ARROWS = 48
_MAX_MARKERS = 64


@dataclass(frozen=True)
class MultiviewRenderSet:
    """Six rendered views plus the camera and depth metadata behind them."""

    images: dict[str, np.ndarray]
    cameras: dict[str, ViewCamera]
    depth_ranges: dict[str, tuple[float, float]]
    threshold: float
    empty: bool

    def save(self, out_dir) -> dict[str, Path]:
        """Write {view}.png for each view plus a views.json sidecar."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        meta: dict = {"threshold": self.threshold, "empty": self.empty, "views": {}}
        for view in VIEW_IDS:
            path = out / f"{view}.png"
            Image.fromarray(self.images[view]).save(path)
            paths[view] = path
            meta["views"][view] = {
                **self.cameras[view].as_dict(),
                "depth_range": list(self.depth_ranges[view]),
                "file": path.name,
            }
        (out / "views.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        return paths


def _subsample(nodes: np.ndarray, cap: int) -> np.ndarray:
    if len(nodes) <= cap:
        return nodes
    stride = int(np.ceil(len(nodes) / cap))
    return nodes[::stride]


def _build_glyphs(mesh: StructuredMesh, loads, bcs):
    glyphs = []
    h = float(np.mean(mesh.spacing))
    for lc in loads:
        nodes = _subsample(select_nodes(mesh, lc.where, lc.name), _MAX_ARROWS)
        force = np.asarray(lc.force, float)
        mag = float(np.linalg.norm(force))
        length = min(6.0 * h, 2.0 * h * mag)
        direction = tuple(force / mag)
        for p in mesh.node_coords[nodes]:
            glyphs.append(ArrowGlyph(anchor=tuple(p), direction=direction, length=length))
    for bc in bcs:
        nodes = _subsample(select_nodes(mesh, bc.where, bc.name), _MAX_MARKERS)
        for p in mesh.node_coords[nodes]:
            glyphs.append(MarkerGlyph(anchor=tuple(p)))
    return glyphs


def render_sixpack(
    densities: np.ndarray,
    mesh: StructuredMesh,
    loads: list[LoadCase] = (),
    bcs: list[DirichletBC] = (),
    threshold: float = 0.5,
    glyphs: bool = True,
    colorbar: bool = True,
    width: int = 1920,
    height: int = 1080,
) -> MultiviewRenderSet:
    """Six orthographic views of {density >= threshold}.

    Cameras frame the full domain box (not the solid), so images from
    different revisions of the same problem share a common scale.
    """
    surface = extract_surface(densities, mesh, threshold)
    cams = six_cameras((0.0, 0.0, 0.0), (mesh.lx, mesh.ly, mesh.lz), aspect=width / height)
    overlay = _build_glyphs(mesh, loads, bcs) if glyphs else []

    images = {}
    ranges = {}
    for view, cam in cams.items():
        colors = depth_colorize(surface, cam)
        if surface.is_empty:
            ranges[view] = (0.0, 0.0)
        else:
            _, _, d = cam.project(surface.vertices)
            ranges[view] = (float(d.min()), float(d.max()))
        images[view] = render_view(
            surface, colors, cam, glyphs=overlay, colorbar=colorbar,
            width=width, height=height,
        )
    return MultiviewRenderSet(
        images=images,
        cameras=cams,
        depth_ranges=ranges,
        threshold=threshold,
        empty=surface.is_empty,
    )
