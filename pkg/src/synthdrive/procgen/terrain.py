"""Heightfield terrain: stamping, surface classification, vegetation, PGM export."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import polyline
from ..errors import FormatError, ValidationError
from ..rng import substream

STAMP_SIGNS = {"mountain": 1.0, "hill": 1.0, "valley": -1.0, "river": -1.0}

WATER, SAND, GRASS, ROCK, SNOW = range(5)
SURFACE_NAMES = ("water", "sand", "grass", "rock", "snow")
SURFACE_ALBEDO = np.array([
    (0.16, 0.32, 0.52),
    (0.82, 0.76, 0.55),
    (0.33, 0.55, 0.22),
    (0.47, 0.44, 0.41),
    (0.94, 0.95, 0.97),
])


@dataclass
class Heightfield:
    """Regular grid of ground heights, ``heights[iz, ix]`` at ``(ix, iz) * cell_size``."""

    heights: np.ndarray
    cell_size: float = 4.0
    water_level: float = 0.0

    def __post_init__(self):
        self.heights = np.array(self.heights, dtype=np.float64)
        if self.heights.ndim != 2 or min(self.heights.shape) < 2:
            raise ValidationError(f"heightfield grid must be at least 2x2, got {self.heights.shape}")
        if not np.all(np.isfinite(self.heights)):
            raise ValidationError("heightfield contains non-finite heights")
        if self.cell_size <= 0:
            raise ValidationError("cell_size must be positive")

    @classmethod
    def flat(cls, width: int, depth: int, cell_size: float = 4.0, height: float = 0.0, water_level: float = 0.0):
        return cls(np.full((depth, width), float(height)), cell_size, water_level)

    @property
    def width(self) -> int:
        return self.heights.shape[1]

    @property
    def depth(self) -> int:
        return self.heights.shape[0]

    @property
    def extent(self) -> tuple:
        return ((self.width - 1) * self.cell_size, (self.depth - 1) * self.cell_size)

    def grid_coords(self):
        xs = np.arange(self.width) * self.cell_size
        zs = np.arange(self.depth) * self.cell_size
        return np.meshgrid(xs, zs)

    def contains(self, x: float, z: float) -> bool:
        ex, ez = self.extent
        return 0.0 <= x <= ex and 0.0 <= z <= ez

    def copy(self) -> "Heightfield":
        return Heightfield(self.heights.copy(), self.cell_size, self.water_level)

    def sample(self, x, z):
        """Bilinear height at world ``(x, z)``; points outside are clamped to the edge."""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        fx = np.clip(x / self.cell_size, 0.0, self.width - 1.0)
        fz = np.clip(z / self.cell_size, 0.0, self.depth - 1.0)
        ix = np.minimum(np.floor(fx).astype(int), self.width - 2)
        iz = np.minimum(np.floor(fz).astype(int), self.depth - 2)
        tx, tz = fx - ix, fz - iz
        h = self.heights
        top = h[iz, ix] * (1 - tx) + h[iz, ix + 1] * tx
        bottom = h[iz + 1, ix] * (1 - tx) + h[iz + 1, ix + 1] * tx
        return top * (1 - tz) + bottom * tz

    def slope_degrees(self) -> np.ndarray:
        gz, gx = np.gradient(self.heights, self.cell_size)
        return np.degrees(np.arctan(np.hypot(gx, gz)))


@dataclass(frozen=True)
class Stamp:
    """Additive terrain feature with compact smooth support.

    ``river`` stamps carve a capsule along ``path``; the others are radial
    around ``center``.
    """

    kind: str
    center: tuple
    radius: float
    amplitude: float
    path: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in STAMP_SIGNS:
            raise ValidationError(f"unknown stamp kind {self.kind!r}")
        if not self.radius > 0:
            raise ValidationError("stamp radius must be > 0")
        if self.amplitude == 0 or math.copysign(1.0, self.amplitude) != STAMP_SIGNS[self.kind]:
            raise ValidationError(f"{self.kind} stamp needs a {'positive' if STAMP_SIGNS[self.kind] > 0 else 'negative'} amplitude")

    @classmethod
    def river(cls, path, radius: float, depth: float) -> "Stamp":
        path = tuple(tuple(float(v) for v in p) for p in path)
        return cls("river", path[0], radius, -abs(depth), path)


def falloff(t):
    """smoothstep(1 - t) squared; 1 at t=0 and exactly 0 for t >= 1."""
    u = np.clip(1.0 - np.asarray(t, dtype=float), 0.0, 1.0)
    s = u * u * (3.0 - 2.0 * u)
    return s * s


def apply_stamp(hf: Heightfield, stamp: Stamp) -> Heightfield:
    cx, cz = stamp.center
    if not hf.contains(cx, cz):
        raise ValidationError(f"stamp center {stamp.center} outside terrain extent {hf.extent}")
    gx, gz = hf.grid_coords()
    if stamp.path is not None:
        d = polyline.distance(np.stack([gx.ravel(), gz.ravel()], 1), np.asarray(stamp.path)).reshape(gx.shape)
    else:
        d = np.hypot(gx - cx, gz - cz)
    out = hf.copy()
    mask = d < stamp.radius
    out.heights[mask] += stamp.amplitude * falloff(d[mask] / stamp.radius)
    return out


@dataclass(frozen=True)
class TerrainRules:
    """Surface rule table. Precedence: water, rock, snow, sand, grass.

    Snow needs both the relative height (fraction of the maximum height) and
    a minimum altitude above water, so a flat plateau does not turn white.
    """

    rock_slope: float = 40.0
    snow_fraction: float = 0.85
    snow_min_altitude: float = 60.0
    sand_band: float = 2.0
    vegetated: tuple = (GRASS,)


def classify_terrain(hf: Heightfield, rules: TerrainRules = TerrainRules()) -> np.ndarray:
    h = hf.heights
    wl = hf.water_level
    slope = hf.slope_degrees()
    classes = np.full(h.shape, GRASS, dtype=np.uint8)
    classes[h <= wl + rules.sand_band] = SAND
    hmax = float(h.max())
    snow = (h > rules.snow_fraction * hmax) & (h - wl >= rules.snow_min_altitude)
    classes[snow] = SNOW
    classes[slope > rules.rock_slope] = ROCK
    classes[h < wl] = WATER
    return classes


@dataclass(frozen=True)
class Placement:
    position: tuple
    species: str
    scale: float


SPECIES = ("pine", "oak", "birch")


def scatter_vegetation(
    hf: Heightfield,
    classes: np.ndarray,
    density: float,
    seed: int,
    roads: Sequence = (),
    clearance: float = 1.5,
    avoid: Sequence = (),
    rules: TerrainRules = TerrainRules(),
    species: Sequence[str] = SPECIES,
) -> list:
    """Seeded uniform scatter over vegetated cells.

    ``roads`` holds ``(centerline_xz, half_width)`` pairs (2D x-z polylines) and ``avoid`` holds
    ``(center_xz, radius)`` discs; placements closer than the half width plus
    ``clearance`` to a road, or inside an avoid disc, are discarded.
    """
    if density < 0:
        raise ValidationError("density must be >= 0")
    eligible = np.argwhere(np.isin(classes, rules.vegetated))
    area = len(eligible) * hf.cell_size ** 2
    n = int(math.floor(density * area + 0.5))
    if n == 0 or len(eligible) == 0:
        return []
    rng = substream(seed, "vegetation")
    cells = eligible[rng.integers(0, len(eligible), size=n)]
    jitter = rng.uniform(-0.499, 0.499, size=(n, 2)) * hf.cell_size
    kinds = rng.integers(0, len(species), size=n)
    scales = rng.uniform(0.8, 1.25, size=n)
    ex, ez = hf.extent
    x = np.clip(cells[:, 1] * hf.cell_size + jitter[:, 0], 0.0, ex)
    z = np.clip(cells[:, 0] * hf.cell_size + jitter[:, 1], 0.0, ez)
    keep = np.ones(n, dtype=bool)
    pts = np.stack([x, z], axis=1)
    for centerline, half_width in roads:
        keep &= polyline.distance(pts, centerline) > half_width + clearance
    for center, radius in avoid:
        keep &= np.hypot(x - center[0], z - center[1]) > radius
    y = hf.sample(x, z)
    return [
        Placement((float(x[i]), float(y[i]), float(z[i])), species[kinds[i]], float(scales[i]))
        for i in np.flatnonzero(keep)
    ]


# --------------------------------------------------------------------------
# 16-bit PGM export. Header comment: "# synthdrive height = offset + value * scale"


def export_pgm(hf: Heightfield, path) -> tuple:
    """Write heights as binary 16-bit PGM, rows ordered by increasing z.

    Returns ``(offset, scale)`` so that ``height = offset + value * scale``.
    """
    h = hf.heights
    lo, hi = float(h.min()), float(h.max())
    scale = (hi - lo) / 65535.0 if hi > lo else 1.0
    values = np.round((h - lo) / scale).astype(">u2")
    header = (
        "P5\n"
        f"# synthdrive height = offset + value * scale; offset={lo!r} scale={scale!r} cell_size={hf.cell_size!r}\n"
        f"{hf.width} {hf.depth}\n65535\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(values.tobytes())
    return lo, scale


def read_pgm(path) -> tuple:
    """Read a PGM written by :func:`export_pgm`; returns ``(heights, cell_size)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    lines, pos = [], 0
    while len(lines) < 4:
        end = data.index(b"\n", pos)
        lines.append(data[pos:end].decode("ascii"))
        pos = end + 1
    if lines[0] != "P5" or not lines[1].startswith("#"):
        raise FormatError(f"{path}: not a synthdrive PGM heightmap")
    meta = dict(item.split("=") for item in lines[1].split(";")[1].split())
    w, d = (int(v) for v in lines[2].split())
    values = np.frombuffer(data[pos:], dtype=">u2").reshape(d, w)
    heights = float(meta["offset"]) + values.astype(float) * float(meta["scale"])
    return heights, float(meta["cell_size"])
