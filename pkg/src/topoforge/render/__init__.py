from .surface import SurfaceMesh, extract_surface
from .cameras import ViewCamera, six_cameras, VIEW_IDS
from .raster import depth_colorize, render_view, viridis_color
from .sixpack import MultiviewRenderSet, render_sixpack

__all__ = [
    "SurfaceMesh",
    "extract_surface",
    "ViewCamera",
    "six_cameras",
    "VIEW_IDS",
    "depth_colorize",
    "render_view",
    "viridis_color",
    "MultiviewRenderSet",
    "render_sixpack",
]
