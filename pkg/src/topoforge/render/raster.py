"""Deterministic software rasterizer: z-buffered flat-shaded triangles,
depth-encoded Viridis coloring, and 2D glyph overlays drawn via PIL."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib import colormaps
from PIL import Image, ImageDraw

from .cameras import ViewCamera
from .surface import SurfaceMesh

_VIRIDIS_LUT = np.asarray(colormaps["viridis"](np.linspace(0.0, 1.0, 256)))[:, :3]

BACKGROUND = (255, 255, 255, 255)
_ARROW_COLOR = (214, 39, 40, 255)
_MARKER_COLOR = (31, 60, 180, 255)


def viridis_color(t: np.ndarray) -> np.ndarray:
    """Linear interpolation into the 256-entry Viridis table; t in [0, 1]."""
    t = np.clip(np.asarray(t, float), 0.0, 1.0)
    grid = np.linspace(0.0, 1.0, len(_VIRIDIS_LUT))
    return np.stack([np.interp(t, grid, _VIRIDIS_LUT[:, c]) for c in range(3)], axis=-1)


def depth_colorize(surface: SurfaceMesh, camera: ViewCamera) -> np.ndarray:
    """Per-vertex color: depth normalized over the surface, nearer = brighter."""
    if surface.is_empty:
        return np.zeros((0, 3))
    _, _, d = camera.project(surface.vertices)
    span = float(d.max() - d.min())
    if span == 0.0:
        norm = np.zeros(len(d))
    else:
        norm = (d - d.min()) / span
    return viridis_color(1.0 - norm)


@dataclass(frozen=True)
class ArrowGlyph:
    """Force arrow anchored at a node, drawn in screen space."""

    anchor: tuple[float, float, float]
    direction: tuple[float, float, float]
    length: float  # world units


@dataclass(frozen=True)
class MarkerGlyph:
    """Small triangle marking a constrained node."""

    anchor: tuple[float, float, float]


def _to_screen(camera: ViewCamera, points: np.ndarray, width: int, height: int):
    u, v, d = camera.project(points)
    px = (u / camera.half_width + 1.0) * 0.5 * width
    py = (1.0 - (v / camera.half_height + 1.0) * 0.5) * height
    return px, py, d


def _fill_triangles(img, zbuf, px, py, depth, tris, colors, width, height):
    face_color = (255 * colors[tris].mean(axis=1)).round().astype(np.uint8)
    for t, (i, j, k) in enumerate(tris):
        x1, x2, x3 = px[i], px[j], px[k]
        y1, y2, y3 = py[i], py[j], py[k]
        denom = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
        if abs(denom) < 1e-9:
            continue  # edge-on or degenerate in projection
        x_lo = max(int(np.floor(min(x1, x2, x3))), 0)
        x_hi = min(int(np.ceil(max(x1, x2, x3))) + 1, width)
        y_lo = max(int(np.floor(min(y1, y2, y3))), 0)
        y_hi = min(int(np.ceil(max(y1, y2, y3))) + 1, height)
        if x_lo >= x_hi or y_lo >= y_hi:
            continue
        xs = np.arange(x_lo, x_hi) + 0.5
        ys = (np.arange(y_lo, y_hi) + 0.5)[:, None]
        w1 = ((y2 - y3) * (xs - x3) + (x3 - x2) * (ys - y3)) / denom
        w2 = ((y3 - y1) * (xs - x3) + (x1 - x3) * (ys - y3)) / denom
        w3 = 1.0 - w1 - w2
        inside = (w1 >= -1e-9) & (w2 >= -1e-9) & (w3 >= -1e-9)
        if not inside.any():
            continue
        z = w1 * depth[i] + w2 * depth[j] + w3 * depth[k]
        tile = zbuf[y_lo:y_hi, x_lo:x_hi]
        win = inside & (z < tile)
        tile[win] = z[win]
        img[y_lo:y_hi, x_lo:x_hi][win, :3] = face_color[t]
        img[y_lo:y_hi, x_lo:x_hi][win, 3] = 255


def _draw_colorbar(img, width, height):
    bar_w = 28
    x0 = width - bar_w - 18
    y0, y1 = 60, height - 60
    t = 1.0 - (np.arange(y0, y1) - y0) / max(1, y1 - y0 - 1)
    strip = (255 * viridis_color(t)).round().astype(np.uint8)
    img[y0:y1, x0 : x0 + bar_w, :3] = strip[:, None, :]
    img[y0:y1, x0 : x0 + bar_w, 3] = 255
    img[y0 - 1, x0 - 1 : x0 + bar_w + 1] = (0, 0, 0, 255)
    img[y1, x0 - 1 : x0 + bar_w + 1] = (0, 0, 0, 255)
    img[y0 - 1 : y1 + 1, x0 - 1] = (0, 0, 0, 255)
    img[y0 - 1 : y1 + 1, x0 + bar_w] = (0, 0, 0, 255)


def _draw_glyphs(img, glyphs, camera, width, height):
    image = Image.fromarray(img)
    draw = ImageDraw.Draw(image)
    scale = width / (2.0 * camera.half_width)  # px per world unit, both axes
    for g in glyphs:
        ax, ay, _ = _to_screen(camera, np.asarray([g.anchor]), width, height)
        ax, ay = float(ax[0]), float(ay[0])
        if isinstance(g, MarkerGlyph):
            draw.polygon(
                [(ax, ay), (ax - 4, ay + 8), (ax + 4, ay + 8)],
                fill=_MARKER_COLOR,
                outline=(0, 0, 0, 255),
            )
            continue
        d = np.asarray(g.direction, float)
        du = d @ np.asarray(camera.right)
        dv = d @ np.asarray(camera.up)
        norm = float(np.hypot(du, dv))
        if norm < 1e-9:
            draw.ellipse([ax - 4, ay - 4, ax + 4, ay + 4], fill=_ARROW_COLOR)
            continue
        length_px = g.length * scale
        tx = ax + du / norm * length_px
        ty = ay - dv / norm * length_px
        draw.line([(ax, ay), (tx, ty)], fill=_ARROW_COLOR, width=3)
        back = np.array([ax - tx, ay - ty]) / np.hypot(tx - ax, ty - ay)
        side = np.array([-back[1], back[0]])
        head = 0.3 * length_px
        for s in (1.0, -1.0):
            hx = tx + head * (back[0] * 0.8 + s * side[0] * 0.5)
            hy = ty + head * (back[1] * 0.8 + s * side[1] * 0.5)
            draw.line([(tx, ty), (hx, hy)], fill=_ARROW_COLOR, width=3)
    return np.asarray(image)


def render_view(
    surface: SurfaceMesh,
    colors: np.ndarray,
    camera: ViewCamera,
    glyphs=(),
    colorbar: bool = True,
    width: int = 1920,
    height: int = 1080,
) -> np.ndarray:
    """Rasterize one view to an (H, W, 4) uint8 image.

    Triangles are filled front-to-back against a float z-buffer with flat
    shading (mean of the vertex colors). Glyphs and the colorbar are 2D
    overlays painted after the geometry.
    """
    img = np.empty((height, width, 4), dtype=np.uint8)
    img[:] = BACKGROUND
    if not surface.is_empty:
        zbuf = np.full((height, width), np.inf)
        px, py, depth = _to_screen(camera, surface.vertices, width, height)
        _fill_triangles(img, zbuf, px, py, depth, surface.triangles, colors, width, height)
    if colorbar:
        _draw_colorbar(img, width, height)
    if glyphs:
        img = _draw_glyphs(img, glyphs, camera, width, height)
    return img
