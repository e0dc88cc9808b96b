from .capture import (
    VISIBILITY_THRESHOLD, Annotation, CapturedFrame, annotate, capture_frame, frame_filename, mount_camera,
    read_ppm, write_ppm,
)
from .raster import Framebuffer, Lighting, gather_triangles, rasterize, rasterize_triangles

__all__ = [
    "VISIBILITY_THRESHOLD", "Annotation", "CapturedFrame", "annotate", "capture_frame", "frame_filename",
    "mount_camera", "read_ppm", "write_ppm",
    "Framebuffer", "Lighting", "gather_triangles", "rasterize", "rasterize_triangles",
]
