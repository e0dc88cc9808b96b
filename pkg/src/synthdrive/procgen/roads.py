"""Road splines: Catmull-Rom ribbons, terrain conforming, markings and barriers."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import meshes, polyline
from ..errors import ValidationError
from ..scene import Mesh
from .terrain import Heightfield

# road type -> (speed limit m/s, default width m)
ROAD_TYPES = {
    "highway": (27.8, 12.0),
    "medium": (16.7, 8.0),
    "local": (11.1, 6.0),
}

SURFACE_OFFSET = 0.05  # pavement thickness: ribbon sits this far above the graded road height
MARKING_OFFSET = 0.06


@dataclass(frozen=True)
class Markings:
    dash_length: float = 3.0
    gap_length: float = 3.0
    width: float = 0.15


@dataclass
class RoadSpline:
    control_points: list
    width: float = 6.0
    road_type: str = "local"
    barriers: bool = False
    markings: Optional[Markings] = field(default_factory=Markings)

    def __post_init__(self):
        self.control_points = [tuple(float(v) for v in p) for p in self.control_points]
        if len(self.control_points) < 2:
            raise ValidationError("a road spline needs at least 2 control points")
        if not self.width > 0:
            raise ValidationError("road width must be > 0")
        if self.road_type not in ROAD_TYPES:
            raise ValidationError(f"unknown road type {self.road_type!r}")

    @property
    def speed_limit(self) -> float:
        return ROAD_TYPES[self.road_type][0]


@dataclass
class BuiltRoad:
    spline: RoadSpline
    centerline: np.ndarray  # (n, 3) graded centre line
    road_mesh: Mesh
    marking_meshes: list
    barrier_meshes: list
    heightfield: Heightfield

    @property
    def width(self) -> float:
        return self.spline.width

    @property
    def road_type(self) -> str:
        return self.spline.road_type

    @property
    def centerline_xz(self) -> np.ndarray:
        return self.centerline[:, [0, 2]]

    def __iter__(self):
        # unpacks as (road mesh, marking meshes, updated heightfield)
        return iter((self.road_mesh, self.marking_meshes, self.heightfield))

    def height_at(self, s):
        """Graded road height at arc length ``s`` along the centre line."""
        cum = polyline.arc_lengths(self.centerline_xz)
        return np.interp(s, cum, self.centerline[:, 1])


def catmull_rom(points, segments_per_span: int) -> np.ndarray:
    """Uniform Catmull-Rom through every point, with reflected end tangents."""
    p = np.asarray(points, dtype=float)
    ext = np.concatenate([[2 * p[0] - p[1]], p, [2 * p[-1] - p[-2]]])
    t = np.arange(segments_per_span) / segments_per_span
    t2, t3 = t * t, t * t * t
    out = []
    for i in range(len(p) - 1):
        p0, p1, p2, p3 = ext[i], ext[i + 1], ext[i + 2], ext[i + 3]
        seg = 0.5 * (
            (2 * p1)[None, :]
            + np.outer(t, p2 - p0)
            + np.outer(t2, 2 * p0 - 5 * p1 + 4 * p2 - p3)
            + np.outer(t3, -p0 + 3 * p1 - 3 * p2 + p3)
        )
        out.append(seg)
    out.append(p[-1:])
    return np.concatenate(out)


def _smooth(values: np.ndarray, window: int) -> np.ndarray:
    if len(values) < 3 or window < 2:
        return values.copy()
    pad = window // 2
    padded = np.pad(values, pad, mode="edge")
    kernel = np.ones(2 * pad + 1) / (2 * pad + 1)
    return np.convolve(padded, kernel, mode="valid")


def dash_intervals(length: float, dash: float, gap: float) -> list:
    """Arc intervals of the dashes that fit completely on a line of ``length``."""
    period = dash + gap
    count = int(math.floor((length + gap) / period + 1e-9)) if length >= dash else 0
    return [(k * period, k * period + dash) for k in range(count)]


def _sub_polyline(points, cum, s0, s1):
    inside = (cum > s0) & (cum < s1)
    start, _ = polyline.point_at(points, cum, s0)
    end, _ = polyline.point_at(points, cum, s1)
    return np.concatenate([[start], points[inside], [end]])


def _self_intersects(xz: np.ndarray, half_width: float) -> bool:
    seg = np.diff(xz, axis=0)
    lengths = np.linalg.norm(seg, axis=1)
    if len(seg) < 2:
        return False
    heading = np.arctan2(seg[:, 1], seg[:, 0])
    turn = np.abs((np.diff(heading) + np.pi) % (2 * np.pi) - np.pi)
    step = 0.5 * (lengths[:-1] + lengths[1:])
    radius = np.where(turn > 1e-12, step / np.maximum(turn, 1e-12), np.inf)
    return bool(np.any(radius < half_width))


def build_road(
    spline: RoadSpline,
    hf: Heightfield,
    segments_per_span: Optional[int] = None,
    sample_spacing: float = 2.0,
    smoothing: int = 5,
) -> BuiltRoad:
    """Ribbon mesh along the spline, with the terrain graded to meet it.

    Grid points within the half width plus one and a half cells of the
    centre line take the road height of their closest centre-line point, so
    bilinear terrain samples under the centre line match the road grade.
    """
    ctrl = np.asarray(spline.control_points, dtype=float)
    for x, z in ctrl:
        if not hf.contains(x, z):
            raise ValidationError(f"road control point ({x}, {z}) outside terrain extent {hf.extent}")
    if segments_per_span is None:
        longest = float(np.max(np.linalg.norm(np.diff(ctrl, axis=0), axis=1)))
        segments_per_span = max(1, int(math.ceil(longest / sample_spacing)))
    xz = catmull_rom(ctrl, segments_per_span)
    ex, ez = hf.extent
    xz[:, 0] = np.clip(xz[:, 0], 0.0, ex)
    xz[:, 1] = np.clip(xz[:, 1], 0.0, ez)
    half = spline.width / 2.0
    if _self_intersects(xz, half):
        warnings.warn(f"{spline.road_type} road ribbon self-intersects (turn radius below half width)",
                      RuntimeWarning, stacklevel=2)

    grade = _smooth(hf.sample(xz[:, 0], xz[:, 1]), smoothing)
    grade = np.maximum(grade, hf.water_level + 0.5)  # roads stay dry (embankment)
    cum = polyline.arc_lengths(xz)

    out = hf.copy()
    gx, gz = out.grid_coords()
    reach = half + 1.5 * hf.cell_size
    dist, param = polyline.project(np.stack([gx.ravel(), gz.ravel()], 1), xz)
    mask = (dist <= reach).reshape(gx.shape)
    out.heights[mask] = np.interp(param.reshape(gx.shape)[mask], cum, grade)
    # the road follows the graded ground exactly at every centre-line sample
    grade = out.sample(xz[:, 0], xz[:, 1])

    centerline = np.stack([xz[:, 0], grade, xz[:, 1]], axis=1)
    left_xz = polyline.offset(xz, half)
    right_xz = polyline.offset(xz, -half)
    lift = grade + SURFACE_OFFSET
    road_mesh = meshes.ribbon(
        np.stack([left_xz[:, 0], lift, left_xz[:, 1]], 1),
        np.stack([right_xz[:, 0], lift, right_xz[:, 1]], 1),
    )

    marking_meshes = []
    if spline.markings is not None:
        mk = spline.markings
        pts3 = np.stack([xz[:, 0], grade + MARKING_OFFSET, xz[:, 1]], 1)
        for s0, s1 in dash_intervals(float(cum[-1]), mk.dash_length, mk.gap_length):
            piece = _sub_polyline(pts3, cum, s0, s1)
            pxz = piece[:, [0, 2]]
            l, r = polyline.offset(pxz, mk.width / 2), polyline.offset(pxz, -mk.width / 2)
            marking_meshes.append(meshes.ribbon(
                np.stack([l[:, 0], piece[:, 1], l[:, 1]], 1),
                np.stack([r[:, 0], piece[:, 1], r[:, 1]], 1),
            ))

    barrier_meshes = []
    if spline.barriers:
        for side in (1.0, -1.0):
            edge = polyline.offset(xz, side * (half + 0.3))
            barrier_meshes.append(meshes.wall_strip(np.stack([edge[:, 0], grade, edge[:, 1]], 1), 0.9, 0.3))

    return BuiltRoad(spline, centerline, road_mesh, marking_meshes, barrier_meshes, out)
