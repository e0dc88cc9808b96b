"""The two scene presets: Settlement Complex and Mountain Lowland.

Layouts are expressed as fractions of ``terrain_size`` so the presets scale,
and every random choice comes from a named substream of the SceneSpec seed.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .. import meshes, polyline
from ..dynamics import (
    RoadNetwork, Simulation, TrafficConfig, TIMES_OF_DAY, WEATHERS, spawn_pedestrians, spawn_traffic,
)
from ..errors import ConfigError
from ..rng import derive_seed, substream
from ..scene import Material, Mesh, Scene, Transform, heading_quat, scene_to_dict, subtree_aabb
from .buildings import assemble_building, augment_building_colors, house_kit, industrial_kit
from .roads import ROAD_TYPES, BuiltRoad, Markings, RoadSpline, build_road
from .terrain import (
    SURFACE_ALBEDO, WATER, Heightfield, Stamp, apply_stamp, classify_terrain, scatter_vegetation,
)

PRESETS = ("settlement_complex", "mountain_lowland")
TILE_CELLS = 16
COASTAL_BAND = 80.0
LAND_HEIGHT = 6.0
SEA_FLOOR = -10.0


@dataclass
class SceneSpec:
    preset: str
    seed: int
    terrain_size: float = 512.0
    cell_size: float = 4.0
    traffic_density: float = 6.0  # vehicles per lane-km
    pedestrian_density: float = 40.0  # walkers per km of footpath
    vegetation_density: float = 0.0015  # trees per m^2 of grass
    truck_fraction: float = 0.2
    augment_fraction: float = 0.3
    time_of_day: str = "noon"
    weather: str = "clear"

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        for name in ("traffic_density", "pedestrian_density", "vegetation_density"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.terrain_size < 256:
            raise ConfigError("terrain_size must be at least 256 m")
        if self.cell_size <= 0 or abs(self.terrain_size / self.cell_size - round(self.terrain_size / self.cell_size)) > 1e-9:
            raise ConfigError("terrain_size must be a whole number of cells")
        if not 0.0 <= self.truck_fraction <= 1.0 or not 0.0 <= self.augment_fraction <= 1.0:
            raise ConfigError("fractions must lie in [0, 1]")
        if self.time_of_day not in TIMES_OF_DAY or self.weather not in WEATHERS:
            raise ConfigError(f"unknown conditions {self.time_of_day!r}/{self.weather!r}")
        self.seed = int(self.seed)


@dataclass(eq=False)
class GeneratedScene:
    spec: SceneSpec
    scene: Scene
    heightfield: Heightfield
    surface: np.ndarray
    roads: list
    network: RoadNetwork
    vehicles: list
    pedestrians: list
    vegetation: list
    statics: list
    features: dict = field(default_factory=dict)

    @property
    def buildings(self) -> list:
        return self.scene.find(kind="building")

    def traffic_config(self) -> TrafficConfig:
        s = self.spec
        return TrafficConfig(s.traffic_density, {"car": 1.0 - s.truck_fraction, "truck": s.truck_fraction},
                             s.time_of_day, s.weather)

    def simulation(self, dt: Optional[float] = None) -> Simulation:
        kwargs = {} if dt is None else {"dt": dt}
        return Simulation(self.network, self.vehicles, self.pedestrians, self.statics,
                          seed=self.spec.seed, **kwargs)

    def to_dict(self) -> dict:
        hf = self.heightfield
        return {
            "spec": asdict(self.spec),
            "heightfield": {
                "width": hf.width, "depth": hf.depth, "cell_size": hf.cell_size,
                "water_level": hf.water_level,
                "sha1": hashlib.sha1(hf.heights.tobytes()).hexdigest(),
            },
            "roads": [
                {
                    "type": r.road_type, "width": r.width, "barriers": r.spline.barriers,
                    "control_points": [list(p) for p in r.spline.control_points],
                    "centerline_sha1": hashlib.sha1(r.centerline.tobytes()).hexdigest(),
                }
                for r in self.roads
            ],
            "vehicles": [
                {"id": v.id, "label": v.label, "lane": v.lane.id, "arc_position": v.arc_position, "speed": v.speed}
                for v in self.vehicles
            ],
            "pedestrians": [
                {"id": p.id, "arc_position": p.arc_position, "speed": p.speed} for p in self.pedestrians
            ],
            "vegetation": len(self.vegetation),
            "features": self.features,
            "scene": scene_to_dict(self.scene),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


# --------------------------------------------------------------------------


def coast_profile(z, coast_z: float):
    """Land height falling from LAND_HEIGHT to SEA_FLOOR across the coast.

    The ramp is centred so the water line (height 0) sits exactly at
    ``coast_z``."""
    # smoothstep s(t) reaches LAND/(LAND-SEA) at t0; shift so that t0 maps to coast_z
    frac = LAND_HEIGHT / (LAND_HEIGHT - SEA_FLOOR)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if mid * mid * (3 - 2 * mid) < frac:
            lo = mid
        else:
            hi = mid
    t0 = (lo + hi) / 2
    ramp = 60.0
    t = np.clip((np.asarray(z, float) - (coast_z - t0 * ramp)) / ramp, 0.0, 1.0)
    s = t * t * (3 - 2 * t)
    return LAND_HEIGHT + (SEA_FLOOR - LAND_HEIGHT) * s


class _Builder:
    def __init__(self, spec: SceneSpec):
        self.spec = spec
        self.S = float(spec.terrain_size)
        n = int(round(self.S / spec.cell_size)) + 1
        self.hf = Heightfield(np.zeros((n, n)), spec.cell_size, 0.0)
        self.scene = Scene()
        self.roads: list = []
        self.features: dict = {}
        self.statics: list = []
        self.footpaths: list = []
        self.building_discs: list = []

    def rng(self, purpose: str):
        return substream(self.spec.seed, self.spec.preset, purpose)

    # terrain -------------------------------------------------------------

    def stamp(self, kind, cx, cz, radius, amplitude):
        self.hf = apply_stamp(self.hf, Stamp(kind, (float(cx), float(cz)), float(radius), float(amplitude)))

    def undulate(self, rng, count, z_range, amp=(2.0, 5.0), radius=(40.0, 90.0)):
        for _ in range(count):
            self.stamp("hill", rng.uniform(0, self.S), rng.uniform(*z_range), rng.uniform(*radius), rng.uniform(*amp))

    # roads ---------------------------------------------------------------

    def road(self, points, road_type, barriers=False, markings=True) -> BuiltRoad:
        pts = [(float(np.clip(x, 0, self.S)), float(np.clip(z, 0, self.S))) for x, z in points]
        spline = RoadSpline(pts, ROAD_TYPES[road_type][1], road_type, barriers, Markings() if markings else None)
        built = build_road(spline, self.hf)
        self.hf = built.heightfield
        self.roads.append(built)
        return built

    def road_clearance(self, x, z) -> float:
        """Distance from (x, z) to the nearest road edge."""
        best = np.inf
        for r in self.roads:
            d = float(polyline.distance(np.array([[x, z]]), r.centerline_xz)[0]) - r.width / 2.0
            best = min(best, d)
        return best

    # buildings -----------------------------------------------------------

    def try_building(self, parent, kit, footprint, x, z, facing, seed_tag):
        nx, nz = footprint
        radius = 0.5 * math.hypot(nx, nz) * kit.module_size
        if not (radius <= x <= self.S - radius and radius <= z <= self.S - radius):
            return None
        if self.road_clearance(x, z) < radius + 1.5:
            return None
        if any(math.hypot(x - bx, z - bz) < radius + br + 2.0 for bx, bz, br in self.building_discs):
            return None
        rx, rz = nx * kit.module_size / 2, nz * kit.module_size / 2
        probe_x = np.array([x - rx, x + rx, x - rx, x + rx, x])
        probe_z = np.array([z - rz, z - rz, z + rz, z + rz, z])
        ground = self.hf.sample(probe_x, probe_z)
        if ground.min() < self.hf.water_level + 1.0:
            return None
        node = assemble_building(
            self.scene, kit, footprint, seed=derive_seed(self.spec.seed, "building", seed_tag), parent=parent,
            transform=Transform((x, float(ground.min()), z), heading_quat((facing[0], 0.0, facing[1]))),
        )
        self.building_discs.append((x, z, radius))
        self.statics.append((node.id, subtree_aabb(node)))
        return node

    def settlement_row(self, site, road_xz, s0, s1, side, offset, rng):
        """Buildings at jittered intervals along a curve parallel to the road."""
        group = self.scene.add(None, name=f"settlement-{site}", kind="settlement", meta={"site": site})
        curve = polyline.offset(road_xz, side * offset)
        cum = polyline.arc_lengths(curve)
        kit = house_kit()
        s = s0
        k = 0
        while s < s1:
            pos, d = polyline.point_at(curve, cum, s)
            facing = -side * np.array([d[1], -d[0]])  # toward the road
            footprint = [(2, 2), (2, 3), (3, 2), (1, 2), (2, 1)][int(rng.integers(5))]
            self.try_building(group, kit, footprint, pos[0], pos[1], facing, f"{site}-{k}")
            s += rng.uniform(14.0, 22.0)
            k += 1
        members = [c for c in group.children]
        if members:
            centre = np.mean([c.local.position[[0, 2]] for c in members], axis=0)
            group.meta["center"] = [float(centre[0]), float(centre[1])]
        group.meta["buildings"] = len(members)
        # footpath along the settlement side plus one crossing at its middle
        road_half = None
        for r in self.roads:
            if r.centerline_xz is road_xz or np.shares_memory(r.centerline_xz, road_xz):
                road_half = r.width / 2
        road_half = road_half or 5.0
        walk = polyline.offset(road_xz, side * (road_half + 2.0))
        wcum = polyline.arc_lengths(walk)
        inside = (wcum >= s0) & (wcum <= s1)
        if inside.sum() >= 2:
            self.footpaths.append(self._lift(walk[inside]))
        mid, d = polyline.point_at(road_xz, polyline.arc_lengths(road_xz), (s0 + s1) / 2)
        normal = np.array([d[1], -d[0]])
        crossing = np.array([mid - normal * (road_half + 2.0), mid + normal * (road_half + 2.0)])
        self.footpaths.append(self._lift(crossing, samples=8))
        return group

    def _lift(self, xz, samples=None):
        xz = np.asarray(xz, float)
        if samples:
            t = np.linspace(0, 1, samples)[:, None]
            xz = xz[0] + t * (xz[-1] - xz[0])
        y = self.hf.sample(xz[:, 0], xz[:, 1]) + 0.02
        return np.stack([xz[:, 0], y, xz[:, 1]], 1)

    # props ---------------------------------------------------------------

    def lamp_posts(self, road: BuiltRoad, spacing=40.0):
        group = self.scene.add(None, name="lamp-posts", kind="props")
        mesh = meshes.lamp_post_mesh()
        mat = Material((0.25, 0.25, 0.27))
        xz = road.centerline_xz
        side = polyline.offset(xz, road.width / 2 + 1.5)
        cum = polyline.arc_lengths(side)
        for s in np.arange(spacing / 2, cum[-1], spacing):
            pos, d = polyline.point_at(side, cum, s)
            if self.road_clearance(*pos) < 0.8 or self.hf.sample(pos[0], pos[1]) < self.hf.water_level + 0.5:
                continue
            if any(math.hypot(pos[0] - bx, pos[1] - bz) < br + 1 for bx, bz, br in self.building_discs):
                continue
            y = float(self.hf.sample(pos[0], pos[1]))
            node = self.scene.add(group, name="lamp-post", kind="lamp_post",
                                  local=Transform((pos[0], y, pos[1]), heading_quat((-d[1], 0, d[0]))),
                                  renderable=mesh, material=mat)
            self.statics.append((node.id, subtree_aabb(node)))

    def haystacks(self, rng, count, surface):
        group = self.scene.add(None, name="haystacks", kind="props")
        mesh = meshes.box((1.6, 1.4, 1.6), (0, 0.7, 0))
        mat = Material((0.80, 0.68, 0.35))
        placed = 0
        for _ in range(count * 20):
            if placed >= count:
                break
            x, z = rng.uniform(20, self.S - 20, size=2)
            ix, iz = int(round(x / self.hf.cell_size)), int(round(z / self.hf.cell_size))
            if surface[iz, ix] != 2 or self.road_clearance(x, z) < 6:
                continue
            if any(math.hypot(x - bx, z - bz) < br + 3 for bx, bz, br in self.building_discs):
                continue
            y = float(self.hf.sample(x, z))
            node = self.scene.add(group, name="haystack", kind="haystack", local=Transform((x, y, z)),
                                  renderable=mesh, material=mat)
            self.statics.append((node.id, subtree_aabb(node)))
            placed += 1

    # finishing -----------------------------------------------------------

    def terrain_nodes(self, surface):
        hf = self.hf
        group = self.scene.add(None, name="terrain", kind="terrain")
        xs_all = np.arange(hf.width) * hf.cell_size
        zs_all = np.arange(hf.depth) * hf.cell_size
        mat = Material((0.4, 0.5, 0.3))
        for iz in range(0, hf.depth - 1, TILE_CELLS):
            for ix in range(0, hf.width - 1, TILE_CELLS):
                jz, jx = min(iz + TILE_CELLS, hf.depth - 1), min(ix + TILE_CELLS, hf.width - 1)
                heights = hf.heights[iz:jz + 1, ix:jx + 1]
                m = meshes.grid_surface(xs_all[ix:jx + 1], zs_all[iz:jz + 1], heights)
                cls = surface[iz:jz, ix:jx].ravel()
                colours = SURFACE_ALBEDO[np.concatenate([cls, cls])]
                tile = Mesh(m.vertices, m.triangles, colours)
                self.scene.add(group, name=f"tile-{iz}-{ix}", kind="terrain_tile", renderable=tile, material=mat)
        if np.any(surface == WATER):
            water = meshes.grid_surface([0.0, self.S], [0.0, self.S], np.full((2, 2), hf.water_level - 0.05))
            self.scene.add(None, name="water", kind="water", renderable=water,
                           material=Material(tuple(SURFACE_ALBEDO[WATER])))

    def road_nodes(self):
        group = self.scene.add(None, name="roads", kind="roads")
        asphalt = {"highway": Material((0.22, 0.22, 0.24)), "medium": Material((0.28, 0.28, 0.29)),
                   "local": Material((0.33, 0.32, 0.31))}
        paint = Material((0.95, 0.95, 0.9))
        concrete = Material((0.7, 0.7, 0.68))
        for i, r in enumerate(self.roads):
            node = self.scene.add(group, name=f"road-{i}", kind="road", renderable=r.road_mesh,
                                  material=asphalt[r.road_type], meta={"road_type": r.road_type,
                                                                      "barriers": r.spline.barriers})
            if r.marking_meshes:
                self.scene.add(node, name="markings", kind="marking", renderable=Mesh.merge(r.marking_meshes),
                               material=paint)
            for b in r.barrier_meshes:
                self.scene.add(node, name="barrier", kind="barrier", renderable=b, material=concrete)

    def vegetation_nodes(self, placements):
        group = self.scene.add(None, name="vegetation", kind="vegetation")
        models = {sp: meshes.tree_mesh(h) for sp, h in (("pine", 8.0), ("oak", 6.0), ("birch", 7.0))}
        mats = {"pine": Material((0.13, 0.33, 0.16)), "oak": Material((0.24, 0.42, 0.14)),
                "birch": Material((0.42, 0.55, 0.22))}
        for p in placements:
            self.scene.add(group, name=p.species, kind="tree", local=Transform(p.position, scale=p.scale),
                           renderable=models[p.species], material=mats[p.species])


def _major_road_points(S, coast_z, rng):
    zr = 0.5 * S
    xs = [0.0, 0.18, 0.36, 0.54, 0.72, 0.86, 1.0]
    pts = [(x * S, zr + rng.uniform(-12, 12)) for x in xs[:5]]
    pts += [(0.86 * S, coast_z - 45.0), (S, coast_z - 45.0 + rng.uniform(-5, 5))]
    return pts


def _settlement_complex(b: _Builder):
    S = b.S
    rng = b.rng("layout")
    coast_z = 0.78 * S
    gx, gz = b.hf.grid_coords()
    b.hf.heights[:] = coast_profile(gz, coast_z)
    b.features.update({"coastline_z": coast_z, "coastal_band": COASTAL_BAND})

    trng = b.rng("terrain")
    b.undulate(trng, 8, (0.25 * S, coast_z - 90))
    for x in (0.15, 0.5, 0.85):
        b.stamp("mountain", (x + trng.uniform(-0.05, 0.05)) * S, trng.uniform(0.03, 0.12) * S,
                trng.uniform(0.15, 0.22) * S, trng.uniform(50, 90))
    b.stamp("valley", 0.33 * S, 0.22 * S, 50, -12)

    major = _major_road_points(S, coast_z, rng)
    zmaj = lambda fx: float(np.interp(fx * S, [p[0] for p in major], [p[1] for p in major]))
    # pond and hill beside the major road, before the road grades the terrain
    pond = (0.15 * S, zmaj(0.15) - 75.0)
    b.stamp("valley", pond[0], pond[1], 38.0, -(LAND_HEIGHT + 10.0))
    hill = (0.5 * S, zmaj(0.5) - 62.0)
    b.stamp("hill", hill[0], hill[1], 85.0, 30.0)
    b.features.update({"pond": list(pond), "hill": list(hill)})

    j2, j4 = major[2], major[4]
    segments = [b.road(major[0:3], "highway"), b.road(major[2:5], "highway"), b.road(major[4:7], "highway")]
    b.road([j2, (j2[0] - 0.02 * S, 0.32 * S), (0.3 * S, 0.1 * S)], "medium")
    b.road([j4, (j4[0] + 0.04 * S, 0.3 * S), (0.8 * S, 0.08 * S)], "medium")
    b.road([j4, (0.6 * S, coast_z - 22), (0.25 * S, coast_z - 22), (0.04 * S, coast_z - 30)], "medium")

    major_xz = np.concatenate([segments[0].centerline_xz, segments[1].centerline_xz[1:],
                               segments[2].centerline_xz[1:]])
    mcum = polyline.arc_lengths(major_xz)

    def arc_of(x):
        return float(np.interp(x, major_xz[:, 0], mcum))

    srng = b.rng("settlements")
    # side: +1 is left of travel (west to east travel, left is -z, i.e. inland)
    b.settlement_row("pond", major_xz, arc_of(0.06 * S), arc_of(0.26 * S), +1.0, 20.0, srng)
    b.settlement_row("hill", major_xz, arc_of(0.42 * S), arc_of(0.6 * S), +1.0, 30.0, srng)
    b.settlement_row("sea", major_xz, arc_of(0.84 * S), arc_of(0.99 * S), -1.0, 18.0, srng)

    # industrial complex on the coastal plain
    ind = b.scene.add(None, name="industrial-complex", kind="industrial_complex")
    kit = industrial_kit()
    irng = b.rng("industrial")
    cz = coast_z - 55.0
    for k, x in enumerate((0.27 * S, 0.35 * S, 0.43 * S)):
        fp = [(2, 3), (3, 2), (2, 2)][int(irng.integers(3))]
        b.try_building(ind, kit, fp, x + irng.uniform(-4, 4), cz + irng.uniform(-4, 4), (0.0, 1.0), f"industrial-{k}")
    members = ind.children
    centre = np.mean([c.local.position[[0, 2]] for c in members], axis=0) if members else np.array([0.35 * S, cz])
    ind.meta.update({"center": [float(centre[0]), float(centre[1])], "buildings": len(members)})

    augment_building_colors(b.scene.find(kind="building"), b.spec.augment_fraction, b.spec.seed)
    for seg in segments:
        b.lamp_posts(seg)
    return b


def _mountain_lowland(b: _Builder):
    S = b.S
    trng = b.rng("terrain")
    b.hf.heights[:] = 5.0
    b.undulate(trng, 10, (0.25 * S, 0.75 * S), amp=(2.0, 6.0))
    for band in ((0.0, 0.12), (0.88, 1.0)):
        for x in (0.1, 0.4, 0.7, 0.95):
            b.stamp("mountain", min(S, (x + trng.uniform(-0.05, 0.05)) * S), trng.uniform(*band) * S,
                    trng.uniform(0.12, 0.2) * S, trng.uniform(60, 120))
    lake = (0.75 * S, 0.68 * S)
    b.stamp("valley", lake[0], lake[1], 45.0, -14.0)
    river = [(0.25 * S, 0.0), (0.3 * S, 0.35 * S), (0.27 * S, 0.65 * S), (0.35 * S, S)]
    b.hf = apply_stamp(b.hf, Stamp.river(river, 14.0, 9.0))
    b.features.update({"lake": list(lake), "river": [list(p) for p in river]})

    rng = b.rng("layout")
    zh = 0.5 * S
    hw = [(0.0, zh - 10), (0.25 * S, zh + rng.uniform(-10, 10)), (0.5 * S, zh - 20 + rng.uniform(-5, 5)),
          (0.75 * S, zh + rng.uniform(-10, 10)), (S, zh)]
    b.road(hw[0:3], "highway", barriers=True)
    b.road(hw[2:5], "highway", barriers=True)
    j = hw[2]
    b.road([j, (0.55 * S, 0.28 * S), (0.6 * S, 0.05 * S)], "medium")
    local = b.road([j, (0.45 * S, 0.72 * S), (0.5 * S, 0.9 * S)], "local")
    # footpath beside the local road and a crossing halfway along
    xz = local.centerline_xz
    b.footpaths.append(b._lift(polyline.offset(xz, local.width / 2 + 2.0)))
    mid, d = polyline.point_at(xz, polyline.arc_lengths(xz), polyline.arc_lengths(xz)[-1] / 2)
    n = np.array([d[1], -d[0]]) * (local.width / 2 + 2.0)
    b.footpaths.append(b._lift(np.array([mid - n, mid + n]), samples=8))
    return b


def generate_scene(spec: SceneSpec) -> GeneratedScene:
    """Build a preset scene; the result is a pure function of ``spec``."""
    if not isinstance(spec, SceneSpec):
        raise ConfigError("generate_scene expects a SceneSpec")
    b = _Builder(spec)
    if spec.preset == "settlement_complex":
        _settlement_complex(b)
    elif spec.preset == "mountain_lowland":
        _mountain_lowland(b)
    else:  # pragma: no cover - SceneSpec validates presets
        raise ConfigError(f"unknown preset {spec.preset!r}")

    surface = classify_terrain(b.hf)
    if spec.preset == "settlement_complex":
        b.haystacks(b.rng("haystacks"), 12, surface)
    density = spec.vegetation_density * (2.0 if spec.preset == "mountain_lowland" else 1.0)
    vegetation = scatter_vegetation(
        b.hf, surface, density, derive_seed(spec.seed, spec.preset, "trees"),
        roads=[(r.centerline_xz, r.width / 2 + (1.0 if r.spline.barriers else 0.0)) for r in b.roads],
        clearance=3.0,
        avoid=[((x, z), r + 2.0) for x, z, r in b.building_discs],
    )
    b.terrain_nodes(surface)
    b.road_nodes()
    b.vegetation_nodes(vegetation)

    network = RoadNetwork.from_roads(b.roads)
    traffic_group = b.scene.add(None, name="traffic", kind="traffic")
    cfg = TrafficConfig(spec.traffic_density, {"car": 1.0 - spec.truck_fraction, "truck": spec.truck_fraction},
                        spec.time_of_day, spec.weather)
    vehicles = spawn_traffic(network, cfg, derive_seed(spec.seed, "traffic"),
                             scene=b.scene, parent=traffic_group)
    walkers_group = b.scene.add(None, name="pedestrians", kind="pedestrians")
    path_km = sum(float(polyline.arc_lengths(p)[-1]) for p in b.footpaths) / 1000.0
    n_walkers = int(math.floor(spec.pedestrian_density * path_km + 0.5))
    pedestrians = spawn_pedestrians(b.footpaths, n_walkers, derive_seed(spec.seed, "walkers"),
                                    scene=b.scene, parent=walkers_group)
    b.features["footpath_km"] = path_km
    return GeneratedScene(spec, b.scene, b.hf, surface, b.roads, network, vehicles, pedestrians,
                          vegetation, b.statics, b.features)
