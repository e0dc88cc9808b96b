"""Scene rasterization: culling, LOD choice, flat Lambert shading, z-buffer."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..dynamics import TIMES_OF_DAY, WEATHERS
from ..errors import ConfigError
from ..scene import CULLED, Camera, LodGroup, Scene, frustum_cull, select_lod, world_transform
from ._raster import raster_triangles

DEFAULT_ALBEDO = (0.7, 0.7, 0.7)


@dataclass
class Framebuffer:
    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float64 view depth, +inf on background
    instance: np.ndarray  # (H, W) int32, 0 on background

    def __post_init__(self):
        h, w = self.instance.shape
        if self.color.shape != (h, w, 3) or self.depth.shape != (h, w):
            raise ValueError("framebuffer planes differ in size")

    @property
    def width(self) -> int:
        return self.instance.shape[1]

    @property
    def height(self) -> int:
        return self.instance.shape[0]


# sun elevation / azimuth (degrees, azimuth clockwise from -Z), intensity,
# light colour and sky colour per time of day
_SUN = {
    "dawn": (8.0, 80.0, 0.55, (1.0, 0.78, 0.62), (0.86, 0.66, 0.56)),
    "morning": (30.0, 110.0, 0.85, (1.0, 0.95, 0.88), (0.60, 0.75, 0.92)),
    "noon": (70.0, 180.0, 1.0, (1.0, 1.0, 1.0), (0.53, 0.72, 0.95)),
    "afternoon": (40.0, 240.0, 0.9, (1.0, 0.95, 0.85), (0.55, 0.70, 0.90)),
    "dusk": (6.0, 280.0, 0.5, (1.0, 0.62, 0.45), (0.80, 0.50, 0.40)),
    "night": (35.0, 200.0, 0.12, (0.62, 0.70, 1.0), (0.03, 0.04, 0.08)),
}
# diffuse multiplier, ambient level, sky tint toward grey (weight, grey level)
_WEATHER = {
    "clear": (1.0, 0.35, (0.0, 0.0)),
    "overcast": (0.35, 0.55, (0.6, 0.70)),
    "rain": (0.25, 0.45, (0.7, 0.50)),
    "fog": (0.30, 0.60, (0.8, 0.82)),
}


@dataclass(frozen=True)
class Lighting:
    direction: tuple  # unit vector pointing toward the light
    diffuse: float
    ambient: float
    colour: tuple
    sky: tuple

    @classmethod
    def preset(cls, time_of_day: str = "noon", weather: str = "clear") -> "Lighting":
        if time_of_day not in TIMES_OF_DAY or weather not in WEATHERS:
            raise ConfigError(f"unknown lighting conditions {time_of_day!r}/{weather!r}")
        elev, azim, intensity, colour, sky = _SUN[time_of_day]
        diffuse_mul, ambient, (mix, grey) = _WEATHER[weather]
        if time_of_day == "night":
            ambient *= 0.25
        e, a = math.radians(elev), math.radians(azim)
        direction = (math.cos(e) * math.sin(a), math.sin(e), -math.cos(e) * math.cos(a))
        sky = tuple((1 - mix) * s + mix * grey * max(sky) for s in sky)
        return cls(direction, intensity * diffuse_mul, ambient, colour, tuple(sky))

    @property
    def clear_color(self) -> np.ndarray:
        return np.round(np.clip(self.sky, 0.0, 1.0) * 255.0).astype(np.uint8)


def _face_normals(vertices, triangles):
    a = vertices[triangles[:, 0]]
    n = np.cross(vertices[triangles[:, 1]] - a, vertices[triangles[:, 2]] - a)
    return n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)


def shade(albedo, normals_world, lighting: Lighting) -> np.ndarray:
    """Flat Lambert colour per face as uint8."""
    lam = np.maximum(normals_world @ np.asarray(lighting.direction), 0.0)
    level = lighting.ambient + lighting.diffuse * lam
    rgb = albedo * level[:, None] * np.asarray(lighting.colour)[None, :]
    return np.round(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8)


def gather_triangles(scene: Scene, cam: Camera, lighting: Lighting, worlds: Optional[dict] = None):
    """View-space triangles, colours and owner ids for everything in view."""
    if worlds is None:
        worlds = scene.world_matrices()
    view = cam.view_matrix(world_transform(cam.node))
    nodes = [n for n in scene if n.renderable is not None]
    tris, colours, ids = [], [], []
    for node in frustum_cull(cam, nodes, worlds, view):
        world = worlds[node.id]
        mesh = node.renderable
        if isinstance(mesh, LodGroup):
            level = select_lod(mesh, node, cam, world, view)
            if level == CULLED:
                continue
            mesh = mesh.levels[level][0]
        if len(mesh) == 0:
            continue
        to_view = view @ world
        verts_view = mesh.vertices @ to_view[:3, :3].T + to_view[:3, 3]
        verts_world = mesh.vertices @ world[:3, :3].T + world[:3, 3]
        normals = _face_normals(verts_world, mesh.triangles)
        if np.linalg.det(world[:3, :3]) < 0:
            normals = -normals
        if mesh.face_albedo is not None:
            albedo = np.asarray(mesh.face_albedo, dtype=float)
        else:
            base = node.material.albedo if node.material is not None else DEFAULT_ALBEDO
            albedo = np.broadcast_to(np.asarray(base, dtype=float), (len(mesh), 3))
        tris.append(verts_view[mesh.triangles])
        colours.append(shade(albedo, normals, lighting))
        ids.append(np.full(len(mesh), node.id, dtype=np.int32))
    if not tris:
        return np.zeros((0, 3, 3)), np.zeros((0, 3), np.uint8), np.zeros(0, np.int32)
    return np.concatenate(tris), np.concatenate(colours), np.concatenate(ids)


def rasterize_triangles(tris, colours, ids, cam: Camera, clear_color=(0, 0, 0)) -> Framebuffer:
    """Rasterize explicit view-space triangles; exposed for tests and tools."""
    w, h = cam.width, cam.height
    color = np.empty((h, w, 3), dtype=np.uint8)
    color[:] = np.asarray(clear_color, dtype=np.uint8)
    inv_depth = np.zeros((h, w))
    inst = np.zeros((h, w), dtype=np.int32)
    raster_triangles(
        np.ascontiguousarray(tris, dtype=np.float64), np.ascontiguousarray(colours, dtype=np.uint8),
        np.ascontiguousarray(ids, dtype=np.int32), w, h, float(cam.focal), float(cam.near), float(cam.far),
        color, inv_depth, inst,
    )
    depth = np.full((h, w), np.inf)
    hit = inst != 0
    depth[hit] = 1.0 / inv_depth[hit]
    return Framebuffer(color, depth, inst)


def rasterize(scene: Scene, cam: Camera, lighting: Optional[Lighting] = None, worlds: Optional[dict] = None) -> Framebuffer:
    """Render ``scene`` from ``cam`` after frustum culling and LOD selection."""
    lighting = lighting or Lighting.preset()
    tris, colours, ids = gather_triangles(scene, cam, lighting, worlds)
    return rasterize_triangles(tris, colours, ids, cam, lighting.clear_color)
